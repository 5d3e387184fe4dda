//! The closed exploration loop.
//!
//! Every `node_period` of simulated time the robot scans, updates its pose
//! estimate, and (after the update latency, during which it keeps executing
//! its last command) merges the scan into the map at the estimated pose.
//! It then picks a frontier, plans a path to a viewpoint in front of it and
//! drives there with a rotate-then-drive controller. The run ends when no
//! frontier is left, when every remaining frontier has failed too often, or
//! when the step budget runs out.
//!
//! Both goal strategies (nearest centroid, largest frontier) are
//! reconstructions; the goal criterion of the original system is unknown.

pub mod plan;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use plan::{path_length, plan_path, PlanError, Planner};

use crate::clip::PolygonMap;
use crate::geom::{normalize_angle, segment_intersect, Point2, Pose2, PoseDelta, Segment, SegmentIntersection, EPS_PT};
use crate::loc::{
    advance_time, match_overlap, register_scan, try_loop_closure, update_duration, visual_odom_step,
    wheel_odom_step, LocError, LoopClosure, OdomConfig, Registration, SlamConfig, SlamState,
};
use crate::mapper::{extract_frontiers, integrate_scan, scan_to_polygon, Frontier, MapperConfig, MapperError};
use crate::sensor::{cast_scan, SensorConfig, SensorError, Wall, World};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerLimits {
    /// Degrees per second.
    pub max_angular_speed: f64,
    /// Meters per second.
    pub max_linear_speed: f64,
    pub goal_tolerance: f64,
}

impl Default for ControllerLimits {
    fn default() -> Self {
        ControllerLimits { max_angular_speed: 17.0, max_linear_speed: 0.3, goal_tolerance: 0.3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GoalStrategy {
    NearestCentroid,
    LargestFrontier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExploreConfig {
    pub strategy: GoalStrategy,
    pub clearance: f64,
    /// How far inside the map, along the frontier normal, the robot stops.
    pub standoff: f64,
    pub dt: f64,
    pub step_budget: u64,
    pub start_x: f64,
    pub start_y: f64,
    pub start_heading_deg: f64,
    /// Reaches or failures after which a frontier is given up.
    pub max_goal_attempts: u32,
    /// Rotation performed in place before the first goal.
    pub initial_spin_deg: f64,
    /// Frontiers longer than this are split into pieces for goal selection.
    pub goal_piece_length: f64,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        ExploreConfig {
            strategy: GoalStrategy::NearestCentroid,
            clearance: 0.25,
            standoff: 0.5,
            dt: 0.1,
            step_budget: 100_000,
            start_x: 0.0,
            start_y: 0.0,
            start_heading_deg: 0.0,
            max_goal_attempts: 3,
            initial_spin_deg: 360.0,
            goal_piece_length: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigBundle {
    pub sensor: SensorConfig,
    pub odom: OdomConfig,
    pub slam: SlamConfig,
    pub mapper: MapperConfig,
    pub controller: ControllerLimits,
    pub explore: ExploreConfig,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExploreError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Sensor(#[from] SensorError),
    #[error(transparent)]
    Loc(#[from] LocError),
    #[error(transparent)]
    Mapper(#[from] MapperError),
}

impl ConfigBundle {
    /// Perfect sensing and odometry.
    pub fn noiseless() -> Self {
        ConfigBundle { sensor: SensorConfig::noiseless(), odom: OdomConfig::noiseless(), ..ConfigBundle::default() }
    }

    pub fn validate(&self) -> Result<(), ExploreError> {
        self.sensor.validate()?;
        self.odom.validate()?;
        self.slam.validate()?;
        let bad = |m: &str| Err(ExploreError::Config(m.to_string()));
        let c = &self.controller;
        if !(c.max_angular_speed > 0.0 && c.max_linear_speed > 0.0 && c.goal_tolerance > 0.0) {
            return bad("controller limits must be positive");
        }
        let e = &self.explore;
        if !(e.dt > 0.0 && e.goal_piece_length > 0.0 && e.clearance >= 0.0 && e.standoff >= 0.0 && e.initial_spin_deg >= 0.0) {
            return bad("dt must be positive; clearance, standoff and spin non-negative");
        }
        if !(e.start_x.is_finite() && e.start_y.is_finite() && e.start_heading_deg.is_finite()) {
            return bad("start pose must be finite");
        }
        let m = &self.mapper;
        if !(m.snap_grid > 0.0 && m.simplify_tol >= 0.0 && m.min_frontier_length >= 0.0 && m.obstacle_gap_max > 0.0) {
            return bad("mapper tolerances out of range");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Event {
    Scan,
    Registered,
    Rejected,
    LoopClosed,
    GoalReached,
    Replan,
    Done,
    Stalled,
    StepBudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: u64,
    pub sim_time: f64,
    pub event: Event,
    pub true_pose: Pose2,
    pub est_pose: Pose2,
    pub map_area: f64,
    pub frontier_total: f64,
    pub node_count: usize,
    pub update_duration: f64,
    /// Commanded angular speed, degrees per second.
    pub omega_dps: f64,
    /// Commanded linear speed, meters per second.
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Done,
    Stalled,
    StepBudgetExhausted,
}

#[derive(Debug, Clone)]
pub struct Exploration {
    pub map: PolygonMap,
    pub frontiers: Vec<Frontier>,
    pub trace: Vec<TraceRecord>,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Command {
    pub omega_dps: f64,
    pub v: f64,
}

/// Index of the frontier `strategy` picks among those `allowed`.
pub fn select_frontier(
    frontiers: &[Frontier],
    from: Point2,
    strategy: GoalStrategy,
    allowed: impl Fn(usize) -> bool,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, f) in frontiers.iter().enumerate().filter(|(i, _)| allowed(*i)) {
        let key = match strategy {
            GoalStrategy::NearestCentroid => f.centroid.dist(from),
            GoalStrategy::LargestFrontier => -f.length,
        };
        // Earlier entries (longer frontiers) win ties.
        if best.is_none_or(|(_, k)| key < k - EPS_PT) {
            best = Some((i, key));
        }
    }
    best.map(|(i, _)| i)
}

/// Centroid of the frontier chosen by `strategy`, absent when none remain.
pub fn select_goal(frontiers: &[Frontier], pose_est: Pose2, strategy: GoalStrategy) -> Option<Point2> {
    select_frontier(frontiers, pose_est.position(), strategy, |_| true).map(|i| frontiers[i].centroid)
}

fn turn_command(err: f64, limits: &ControllerLimits, dt: f64) -> f64 {
    (err.to_degrees() / dt).clamp(-limits.max_angular_speed, limits.max_angular_speed)
}

/// One rotate-then-drive control step toward `path[0]`.
pub fn step_motion(pose: Pose2, path: &[Point2], limits: &ControllerLimits, dt: f64) -> (Pose2, Command) {
    let Some(&target) = path.first() else {
        return (pose, Command::default());
    };
    let d = target - pose.position();
    let dist = d.norm();
    if dist < 1e-12 {
        return (pose, Command::default());
    }
    let err = normalize_angle(d.y.atan2(d.x) - pose.theta);
    let omega_dps = turn_command(err, limits, dt);
    let v = if err.to_degrees().abs() < 10.0 { limits.max_linear_speed.min(dist / dt) } else { 0.0 };
    let cmd = Command { omega_dps, v };
    (pose.compose(PoseDelta::new(v * dt, 0.0, omega_dps.to_radians() * dt)), cmd)
}

enum Mode {
    Spin(f64),
    Follow { path: Vec<Point2>, face: f64, key: Point2 },
    Face { face: f64, key: Point2 },
    Idle,
}

const STICKY_RADIUS: f64 = 0.75;

struct Attempts(Vec<(Point2, u32)>);

impl Attempts {
    const RADIUS: f64 = 0.5;

    fn count(&self, p: Point2) -> u32 {
        self.0.iter().filter(|(q, _)| q.dist(p) <= Self::RADIUS).map(|(_, c)| *c).max().unwrap_or(0)
    }

    fn bump(&mut self, p: Point2) {
        match self.0.iter_mut().find(|(q, _)| q.dist(p) <= Self::RADIUS) {
            Some((_, c)) => *c += 1,
            None => self.0.push((p, 1)),
        }
    }
}

struct Sim<'a> {
    world: &'a World,
    cfg: &'a ConfigBundle,
    walls: Vec<Wall>,
    sensor_rng: ChaCha8Rng,
    odom_rng: ChaCha8Rng,
    slam_rng: ChaCha8Rng,
    truth: Pose2,
    slam: SlamState,
    map: PolygonMap,
    frontiers: Vec<Frontier>,
    frontier_total: f64,
    cmd: Command,
    steps: u64,
    last_features: u32,
    last_update: f64,
    prev_scan_heading: Option<f64>,
    mode: Mode,
    attempts: Attempts,
    goal_key: Option<Point2>,
    /// Set when planning failed since the last scan; cleared by the next scan.
    plan_failed: bool,
    next_scan: f64,
    trace: Vec<TraceRecord>,
}

impl<'a> Sim<'a> {
    fn record(&mut self, event: Event) {
        self.trace.push(TraceRecord {
            step: self.steps,
            sim_time: self.slam.sim_time,
            event,
            true_pose: self.truth,
            est_pose: self.slam.est_pose,
            map_area: self.map.total_area(),
            frontier_total: self.frontier_total,
            node_count: self.slam.node_count(),
            update_duration: self.last_update,
            omega_dps: self.cmd.omega_dps,
            v: self.cmd.v,
        });
    }

    fn blocked(&self, from: Point2, to: Point2) -> bool {
        let s = Segment::new(from, to);
        self.walls.iter().any(|w| !matches!(segment_intersect(s, w.seg), SegmentIntersection::None))
    }

    /// Executes the current command for `duration`; returns true on a bump.
    fn drive(&mut self, duration: f64) -> bool {
        let dt = self.cfg.explore.dt;
        let n = ((duration / dt) - 1e-9).ceil().max(1.0) as usize;
        let h = duration / n as f64;
        let mut bumped = false;
        for _ in 0..n {
            let mut delta = PoseDelta::new(self.cmd.v * h, 0.0, self.cmd.omega_dps.to_radians() * h);
            if delta.dx != 0.0 {
                let next = self.truth.compose(delta);
                if self.blocked(self.truth.position(), next.position()) {
                    delta.dx = 0.0;
                    bumped = true;
                }
            }
            self.truth = self.truth.compose(delta);
            let odom = &self.cfg.odom;
            let meas = visual_odom_step(self.last_features, delta, odom, &mut self.odom_rng)
                .unwrap_or_else(|| wheel_odom_step(delta, odom, &mut self.odom_rng));
            self.slam.est_pose = self.slam.est_pose.compose(meas);
            advance_time(&mut self.slam, self.cmd.omega_dps, h);
            self.steps += 1;
        }
        if bumped {
            self.cmd = Command::default();
        }
        bumped
    }

    fn scan_cycle(&mut self) -> Result<(), ExploreError> {
        let cfg = self.cfg;
        let scan = cast_scan(self.truth, self.world, &cfg.sensor, self.slam.sim_time, &mut self.sensor_rng)?;
        self.last_features = scan.feature_count;
        if cfg.slam.registration_enabled {
            if let Some(prev) = self.prev_scan_heading {
                let overlap = match_overlap(prev, self.truth.theta, cfg.sensor.fov_deg);
                let r = register_scan(
                    &mut self.slam,
                    self.truth,
                    scan.feature_count,
                    overlap,
                    &cfg.slam,
                    &cfg.odom,
                    &mut self.slam_rng,
                );
                self.record(if matches!(r, Registration::Accepted(_)) { Event::Registered } else { Event::Rejected });
            }
        }
        self.prev_scan_heading = Some(self.truth.theta);
        self.slam.add_node(self.truth, scan.feature_count);
        if cfg.slam.loop_closure_enabled {
            if let LoopClosure::Closed { .. } = try_loop_closure(&mut self.slam, self.truth, scan.feature_count, &cfg.slam) {
                self.record(Event::LoopClosed);
            }
        }
        let placed_at = self.slam.est_pose;
        self.last_update = update_duration(self.slam.node_count(), &cfg.slam);
        if self.drive(self.last_update) {
            self.fail_goal();
        }
        match scan_to_polygon(&scan, placed_at, &cfg.mapper) {
            Ok(poly) => self.map = integrate_scan(&self.map, &poly, cfg.mapper.snap_grid)?,
            Err(MapperError::DegenerateScan(_)) => {}
            Err(e) => return Err(e.into()),
        }
        self.frontiers = extract_frontiers(&self.map, cfg.mapper.min_frontier_length);
        self.frontier_total = self.frontiers.iter().fold(0.0, |acc, f| acc + f.length);
        self.record(Event::Scan);
        Ok(())
    }

    fn blacklisted(&self, f: &Frontier) -> bool {
        self.attempts.count(f.centroid) >= self.cfg.explore.max_goal_attempts
    }

    fn fail_goal(&mut self) {
        if let Some(a) = self.goal_key.take() {
            self.attempts.bump(a);
        }
        self.mode = Mode::Idle;
    }

    /// Candidate viewpoints for a frontier piece. Points straight in from
    /// the piece come first, then rings around it ordered by distance from
    /// the robot (pieces bounding small pockets are best seen from across).
    fn viewpoints(&self, f: &Frontier) -> Vec<Point2> {
        let here = self.slam.est_pose.position();
        let inward = if f.normal.norm() > 0.5 { f.normal * -1.0 } else { (here - f.centroid).normalized() };
        let standoff = self.cfg.explore.standoff;
        let mut views: Vec<Point2> = (0..5).map(|k| f.centroid + inward * (standoff + 0.25 * k as f64)).collect();
        let mut ring: Vec<Point2> = [0.75, 1.0, 1.5]
            .iter()
            .flat_map(|r| (0..12).map(move |k| Point2::from_polar(*r, k as f64 * std::f64::consts::TAU / 12.0)))
            .map(|d| f.centroid + d)
            .collect();
        ring.sort_by(|a, b| a.dist(here).total_cmp(&b.dist(here)));
        views.extend(ring);
        views
    }

    /// Chooses a frontier piece and a path to it. Returns false once every
    /// remaining piece has been given up.
    fn replan(&mut self) -> bool {
        let cfg = self.cfg;
        let pieces: Vec<Frontier> =
            self.frontiers.iter().flat_map(|f| f.split(cfg.explore.goal_piece_length)).collect();
        let allowed: Vec<bool> = pieces.iter().map(|f| !self.blacklisted(f)).collect();
        if !allowed.iter().any(|a| *a) {
            return false;
        }
        let here = self.slam.est_pose.position();
        let mut order = Vec::new();
        if let Some(k) = self.goal_key {
            let sticky = (0..pieces.len())
                .filter(|&i| allowed[i] && pieces[i].centroid.dist(k) <= STICKY_RADIUS)
                .min_by(|&i, &j| pieces[i].centroid.dist(k).total_cmp(&pieces[j].centroid.dist(k)));
            order.extend(sticky);
        }
        let mut left = allowed;
        for &i in &order {
            left[i] = false;
        }
        while order.len() < 4 {
            match select_frontier(&pieces, here, cfg.explore.strategy, |i| left[i]) {
                Some(i) => {
                    left[i] = false;
                    order.push(i);
                }
                None => break,
            }
        }
        let planner = Planner::new(&self.map, cfg.explore.clearance);
        for i in order {
            let key = pieces[i].centroid;
            let views = self.viewpoints(&pieces[i]);
            let path = views
                .iter()
                .find_map(|v| planner.goal_point(*v, cfg.controller.goal_tolerance))
                .and_then(|g| planner.shortest_path(here, g).ok().flatten());
            match path {
                Some(p) => {
                    let look = key - *p.last().unwrap_or(&here);
                    let face = look.y.atan2(look.x);
                    let new_goal = self.goal_key.is_none_or(|k| k.dist(key) > STICKY_RADIUS);
                    self.goal_key = Some(key);
                    self.mode = Mode::Follow { path: p[1..].to_vec(), face, key };
                    if new_goal {
                        self.record(Event::Replan);
                    }
                    return true;
                }
                None => self.attempts.bump(key),
            }
        }
        self.goal_key = None;
        self.mode = Mode::Idle;
        self.plan_failed = true;
        true
    }

    /// Time the next command will be held: one step, or the step plus the
    /// whole map update when a scan is due after it.
    fn horizon(&self) -> f64 {
        let dt = self.cfg.explore.dt;
        if self.slam.sim_time + dt + 1e-9 >= self.next_scan {
            dt + update_duration(self.slam.node_count() + 1, &self.cfg.slam)
        } else {
            dt
        }
    }

    /// Picks the command for the next control step; may finish a goal.
    fn control(&mut self) {
        let cfg = self.cfg;
        let dt = cfg.explore.dt;
        let horizon = self.horizon();
        let est = self.slam.est_pose;
        let limits = &cfg.controller;
        match &mut self.mode {
            Mode::Spin(left) => {
                let w = limits.max_angular_speed.min(*left / dt);
                *left -= w * dt;
                self.cmd = Command { omega_dps: w, v: 0.0 };
                if *left <= 1e-9 {
                    self.mode = Mode::Idle;
                }
            }
            Mode::Follow { path, face, key } => {
                while let Some(p) = path.first() {
                    let tol = if path.len() == 1 { 0.02 } else { 0.1 };
                    if p.dist(est.position()) < tol {
                        path.remove(0);
                    } else {
                        break;
                    }
                }
                if path.is_empty() {
                    self.mode = Mode::Face { face: *face, key: *key };
                    return self.control();
                }
                self.cmd = step_motion(est, path, limits, horizon).1;
            }
            Mode::Face { face, key } => {
                let err = normalize_angle(*face - est.theta);
                if err.to_degrees().abs() < 1.0 {
                    let a = *key;
                    self.cmd = Command::default();
                    self.attempts.bump(a);
                    self.mode = Mode::Idle;
                    self.record(Event::GoalReached);
                } else {
                    self.cmd = Command { omega_dps: turn_command(err, limits, horizon), v: 0.0 };
                }
            }
            Mode::Idle => self.cmd = Command::default(),
        }
    }
}

/// Runs one exploration; fully determined by `(world, cfg, seed)`.
pub fn run_exploration(world: &World, cfg: &ConfigBundle, seed: u64) -> Result<Exploration, ExploreError> {
    cfg.validate()?;
    let e = &cfg.explore;
    let start = Pose2::new(e.start_x, e.start_y, e.start_heading_deg.to_radians());
    let stream = |k: u64| {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        r.set_stream(k);
        r
    };
    let mut sim = Sim {
        world,
        cfg,
        walls: world.walls(),
        sensor_rng: stream(1),
        odom_rng: stream(2),
        slam_rng: stream(3),
        truth: start,
        slam: SlamState::new(start),
        map: PolygonMap::empty(),
        frontiers: Vec::new(),
        frontier_total: 0.0,
        cmd: Command::default(),
        steps: 0,
        last_features: 0,
        last_update: 0.0,
        prev_scan_heading: None,
        mode: if e.initial_spin_deg > 0.0 { Mode::Spin(e.initial_spin_deg) } else { Mode::Idle },
        attempts: Attempts(Vec::new()),
        goal_key: None,
        plan_failed: false,
        next_scan: 0.0,
        trace: Vec::new(),
    };
    let outcome = loop {
        if sim.slam.sim_time + 1e-9 >= sim.next_scan {
            let t0 = sim.slam.sim_time;
            sim.scan_cycle()?;
            sim.plan_failed = false;
            sim.next_scan = (t0 + cfg.slam.node_period).max(sim.slam.sim_time);
            if sim.frontiers.is_empty() {
                sim.cmd = Command::default();
                sim.record(Event::Done);
                break Outcome::Done;
            }
            if !matches!(sim.mode, Mode::Spin(_)) && !sim.replan() {
                sim.cmd = Command::default();
                sim.record(Event::Stalled);
                break Outcome::Stalled;
            }
        }
        if sim.steps >= e.step_budget {
            sim.cmd = Command::default();
            sim.record(Event::StepBudgetExhausted);
            break Outcome::StepBudgetExhausted;
        }
        sim.control();
        if matches!(sim.mode, Mode::Idle) && !sim.plan_failed && !sim.replan() {
            sim.cmd = Command::default();
            sim.record(Event::Stalled);
            break Outcome::Stalled;
        }
        if matches!(sim.mode, Mode::Follow { .. }) && sim.cmd == Command::default() {
            sim.control();
        }
        if sim.drive(e.dt) {
            sim.fail_goal();
        }
    };
    Ok(Exploration { map: sim.map, frontiers: sim.frontiers, trace: sim.trace, outcome })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub coverage: f64,
    pub final_loc_error_m: f64,
    pub reject_rate: f64,
    /// Simulated seconds until coverage first reached 90%.
    pub t90_s: Option<f64>,
    pub steps: u64,
}

pub fn compute_metrics(trace: &[TraceRecord], world: &World) -> Metrics {
    let free = world.free_area();
    let last = trace.last().expect("metrics need a non-empty trace");
    let (mut accepted, mut rejected) = (0usize, 0usize);
    for r in trace {
        match r.event {
            Event::Registered => accepted += 1,
            Event::Rejected => rejected += 1,
            _ => {}
        }
    }
    let tries = accepted + rejected;
    Metrics {
        coverage: last.map_area / free,
        final_loc_error_m: last.true_pose.position().dist(last.est_pose.position()),
        reject_rate: if tries == 0 { 0.0 } else { rejected as f64 / tries as f64 },
        t90_s: trace.iter().find(|r| r.map_area >= 0.9 * free).map(|r| r.sim_time),
        steps: last.step,
    }
}
