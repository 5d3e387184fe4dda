//! Simulated planar depth scan from a narrow-FOV time-of-flight camera.
//!
//! Each ray draws its own usable range from the envelope of the current
//! illumination condition. Bright sunlight collapses that envelope to a
//! couple of meters, shade restores a few more, and the evening range
//! approaches the indoor figure. Returns are perturbed by truncated Gaussian
//! noise, dropped with a probability that ramps quadratically toward the
//! range limit, and rays striking reflective material may report a ghost
//! return further along the ray.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{point_in_region, segment_intersect, Location, Point2, Pose2, Ring, Segment, SegmentIntersection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Illumination {
    Indoor,
    BrightSun,
    Shadow,
    Evening,
}

impl Illumination {
    pub const ALL: [Illumination; 4] =
        [Illumination::Indoor, Illumination::BrightSun, Illumination::Shadow, Illumination::Evening];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Material {
    Matte,
    Reflective,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub ring: Ring,
    pub material: Material,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureSite {
    pub p: Point2,
    pub richness: u32,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("bounds ring self-intersects (edges {0} and {1})")]
    BoundsNotSimple(usize, usize),
    #[error("obstacle {index}: ring self-intersects (edges {a} and {b})")]
    ObstacleNotSimple { index: usize, a: usize, b: usize },
    #[error("obstacle {0}: vertex outside bounds")]
    ObstacleOutside(usize),
    #[error("feature site {0}: more than 0.1 m from every wall")]
    SiteAwayFromWalls(usize),
}

/// Ground-truth scene.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub bounds: Ring,
    pub obstacles: Vec<Obstacle>,
    pub feature_sites: Vec<FeatureSite>,
    pub illumination: Illumination,
}

/// One wall segment of the world; `obstacle` is `None` for the bounds.
#[derive(Debug, Clone, Copy)]
pub struct Wall {
    pub seg: Segment,
    pub material: Material,
    pub obstacle: Option<usize>,
}

const SITE_WALL_DISTANCE: f64 = 0.1;

impl World {
    pub fn walls(&self) -> Vec<Wall> {
        let mut w: Vec<Wall> =
            self.bounds.edges().map(|seg| Wall { seg, material: Material::Matte, obstacle: None }).collect();
        for (i, o) in self.obstacles.iter().enumerate() {
            w.extend(o.ring.edges().map(|seg| Wall { seg, material: o.material, obstacle: Some(i) }));
        }
        w
    }

    /// Area of bounds minus obstacles (obstacles are assumed disjoint).
    pub fn free_area(&self) -> f64 {
        self.bounds.signed_area().abs() - self.obstacles.iter().map(|o| o.ring.signed_area().abs()).sum::<f64>()
    }

    /// Geometry invariants beyond what [`Ring`] construction checks.
    pub fn validate(&self) -> Result<(), WorldError> {
        if let Some((a, b)) = self.bounds.first_self_intersection() {
            return Err(WorldError::BoundsNotSimple(a, b));
        }
        let bounds = std::slice::from_ref(&self.bounds);
        for (index, o) in self.obstacles.iter().enumerate() {
            if let Some((a, b)) = o.ring.first_self_intersection() {
                return Err(WorldError::ObstacleNotSimple { index, a, b });
            }
            if o.ring.vertices().iter().any(|p| point_in_region(*p, bounds) == Location::Outside) {
                return Err(WorldError::ObstacleOutside(index));
            }
        }
        let walls = self.walls();
        for (i, s) in self.feature_sites.iter().enumerate() {
            let near = walls.iter().any(|w| w.seg.distance_to_point(s.p) <= SITE_WALL_DISTANCE + 1e-9);
            if !near {
                return Err(WorldError::SiteAwayFromWalls(i));
            }
        }
        Ok(())
    }

    /// The obstacle whose interior contains `p`, if any.
    pub fn obstacle_at(&self, p: Point2) -> Option<usize> {
        self.obstacles
            .iter()
            .position(|o| point_in_region(p, std::slice::from_ref(&o.ring)) == Location::Inside)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeBounds {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeTable {
    pub indoor: RangeBounds,
    pub bright_sun: RangeBounds,
    pub shadow: RangeBounds,
    pub evening: RangeBounds,
}

impl Default for RangeTable {
    fn default() -> Self {
        RangeTable {
            indoor: RangeBounds { lo: 7.0, hi: 8.0 },
            bright_sun: RangeBounds { lo: 1.2, hi: 2.4 },
            shadow: RangeBounds { lo: 3.5, hi: 6.0 },
            evening: RangeBounds { lo: 11.0, hi: 12.0 },
        }
    }
}

impl RangeTable {
    pub fn get(&self, illum: Illumination) -> RangeBounds {
        match illum {
            Illumination::Indoor => self.indoor,
            Illumination::BrightSun => self.bright_sun,
            Illumination::Shadow => self.shadow,
            Illumination::Evening => self.evening,
        }
    }
}

/// Where the ghost return of a ray hitting reflective material comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GhostPath {
    /// Single specular bounce off the surface.
    Mirror,
    /// The ray continues through the surface (glass) to whatever is behind.
    Transmit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    pub fov_deg: f64,
    pub num_rays: usize,
    pub ranges: RangeTable,
    pub range_noise_sigma: f64,
    pub dropout_base: f64,
    pub dropout_near_limit: f64,
    pub ghost_gain: f64,
    pub ghost_path: GhostPath,
    /// Mean of the Poisson count of spurious features per scan.
    pub clutter_rate: f64,
    /// Overrides the world's illumination when set.
    pub illumination: Option<Illumination>,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig {
            fov_deg: 70.0,
            num_rays: 141,
            ranges: RangeTable::default(),
            range_noise_sigma: 0.01,
            dropout_base: 0.01,
            dropout_near_limit: 0.2,
            ghost_gain: 0.2,
            ghost_path: GhostPath::Mirror,
            clutter_rate: 2.0,
            illumination: None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SensorError {
    #[error("invalid sensor config: {0}")]
    InvalidConfig(String),
    #[error("pose lies inside obstacle {0}")]
    PoseInObstacle(usize),
    #[error("pose lies outside the world bounds")]
    PoseOutsideBounds,
}

impl SensorConfig {
    pub fn noiseless() -> Self {
        SensorConfig {
            range_noise_sigma: 0.0,
            dropout_base: 0.0,
            dropout_near_limit: 0.0,
            ghost_gain: 0.0,
            clutter_rate: 0.0,
            ..SensorConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), SensorError> {
        let bad = |m: &str| Err(SensorError::InvalidConfig(m.to_string()));
        if !(self.fov_deg > 0.0 && self.fov_deg <= 180.0) {
            return bad("fov_deg must lie in (0, 180]");
        }
        if self.num_rays < 3 {
            return bad("num_rays must be at least 3");
        }
        for il in Illumination::ALL {
            let r = self.ranges.get(il);
            if !(r.lo > 0.0 && r.lo < r.hi) {
                return bad("each range envelope needs 0 < lo < hi");
            }
        }
        let probs = [self.dropout_base, self.dropout_near_limit, self.ghost_gain];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("probabilities must lie in [0, 1]");
        }
        if self.range_noise_sigma < 0.0 || self.clutter_rate < 0.0 {
            return bad("noise sigma and clutter rate must be non-negative");
        }
        Ok(())
    }

    pub fn fov(&self) -> f64 {
        self.fov_deg.to_radians()
    }

    /// Ray directions in the sensor frame, evenly spaced over the FOV.
    pub fn ray_angles(&self) -> Vec<f64> {
        let fov = self.fov();
        let n = self.num_rays;
        (0..n).map(|i| -0.5 * fov + fov * i as f64 / (n - 1) as f64).collect()
    }

    pub fn active_illumination(&self, world: &World) -> Illumination {
        self.illumination.unwrap_or(world.illumination)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RayReturn {
    ObstacleHit,
    MaxRange,
    Dropout,
    GhostHit,
}

impl RayReturn {
    pub fn is_hit(self) -> bool {
        matches!(self, RayReturn::ObstacleHit | RayReturn::GhostHit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scan {
    pub pose_true: Pose2,
    /// Sensor-frame ray angles, strictly increasing.
    pub angles: Vec<f64>,
    pub ranges: Vec<f64>,
    /// Per-ray usable range drawn for this scan.
    pub max_ranges: Vec<f64>,
    pub hit: Vec<RayReturn>,
    pub feature_count: u32,
    pub timestamp: f64,
}

/// Usable range for one ray, uniform over the active envelope.
pub fn effective_max_range<R: Rng + ?Sized>(cfg: &SensorConfig, illum: Illumination, rng: &mut R) -> f64 {
    let r = cfg.ranges.get(illum);
    rng.random_range(r.lo..=r.hi)
}

/// Probability that a return at distance `d` is lost.
pub fn dropout(d: f64, eff_max: f64, cfg: &SensorConfig) -> f64 {
    let f = (d / eff_max).clamp(0.0, 1.0);
    (cfg.dropout_base + (cfg.dropout_near_limit - cfg.dropout_base) * f * f).clamp(0.0, 1.0)
}

/// Nearest wall hit by the ray `origin + t·dir`, `t > 0`, ignoring `skip`.
pub fn cast_ray(origin: Point2, dir: Point2, walls: &[Wall], skip: Option<usize>) -> Option<(f64, usize)> {
    cast_ray_filtered(origin, dir, walls, |i, _| Some(i) != skip)
}

fn cast_ray_filtered(
    origin: Point2,
    dir: Point2,
    walls: &[Wall],
    keep: impl Fn(usize, &Wall) -> bool,
) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for (i, w) in walls.iter().enumerate() {
        if !keep(i, w) {
            continue;
        }
        let e = w.seg.b - w.seg.a;
        let denom = dir.cross(e);
        if denom.abs() < 1e-15 {
            continue;
        }
        let q = w.seg.a - origin;
        let t = q.cross(e) / denom;
        let u = q.cross(dir) / denom;
        if t > 1e-9 && (0.0..=1.0).contains(&u) && best.is_none_or(|(bt, _)| t < bt) {
            best = Some((t, i));
        }
    }
    best
}

fn ghost_length(origin: Point2, dir: Point2, d: f64, wall_idx: usize, walls: &[Wall], path: GhostPath) -> Option<f64> {
    let hit = origin + dir * d;
    let next = match path {
        // Pass through the whole body of the transmitting obstacle.
        GhostPath::Transmit => {
            let body = walls[wall_idx].obstacle;
            cast_ray_filtered(hit, dir, walls, |i, w| i != wall_idx && (body.is_none() || w.obstacle != body))
        }
        GhostPath::Mirror => {
            let n = (walls[wall_idx].seg.b - walls[wall_idx].seg.a).perp().normalized();
            cast_ray(hit, dir - n * (2.0 * dir.dot(n)), walls, Some(wall_idx))
        }
    };
    next.map(|(d2, _)| d + d2)
}

pub fn cast_scan<R: Rng + ?Sized>(
    pose: Pose2,
    world: &World,
    cfg: &SensorConfig,
    timestamp: f64,
    rng: &mut R,
) -> Result<Scan, SensorError> {
    cfg.validate()?;
    let origin = pose.position();
    if point_in_region(origin, std::slice::from_ref(&world.bounds)) == Location::Outside {
        return Err(SensorError::PoseOutsideBounds);
    }
    if let Some(i) = world.obstacle_at(origin) {
        return Err(SensorError::PoseInObstacle(i));
    }
    let illum = cfg.active_illumination(world);
    let walls = world.walls();
    let angles = cfg.ray_angles();
    let n = angles.len();
    let mut ranges = Vec::with_capacity(n);
    let mut max_ranges = Vec::with_capacity(n);
    let mut hit = Vec::with_capacity(n);
    let sigma = cfg.range_noise_sigma;
    for &a in &angles {
        // Fixed draw order per ray keeps streams aligned across configurations.
        let eff = effective_max_range(cfg, illum, rng);
        let z: f64 = rng.sample::<f64, _>(StandardNormal).clamp(-3.0, 3.0);
        let u_drop: f64 = rng.random();
        let u_ghost: f64 = rng.random();

        let dir = Point2::from_polar(1.0, pose.theta + a);
        max_ranges.push(eff);
        let Some((d, wi)) = cast_ray(origin, dir, &walls, None).filter(|(d, _)| *d <= eff) else {
            ranges.push(eff);
            hit.push(RayReturn::MaxRange);
            continue;
        };
        let ghost = (walls[wi].material == Material::Reflective && u_ghost < cfg.ghost_gain)
            .then(|| ghost_length(origin, dir, d, wi, &walls, cfg.ghost_path))
            .flatten()
            .filter(|g| *g <= eff);
        let (true_range, kind) = match ghost {
            Some(g) => (g, RayReturn::GhostHit),
            None => (d, RayReturn::ObstacleHit),
        };
        if u_drop < dropout(true_range, eff, cfg) {
            ranges.push(eff);
            hit.push(RayReturn::Dropout);
            continue;
        }
        ranges.push((true_range + sigma * z).max(1e-3));
        hit.push(kind);
    }
    let feature_count = count_features(pose, world, cfg, rng);
    Ok(Scan { pose_true: pose, angles, ranges, max_ranges, hit, feature_count, timestamp })
}

fn line_of_sight(from: Point2, to: Point2, walls: &[Wall]) -> bool {
    let len = from.dist(to);
    if len < 1e-9 {
        return true;
    }
    // Stop just short of the site, which itself sits on a wall.
    let end = from.lerp(to, 1.0 - (0.02 / len).min(1.0));
    let sight = Segment::new(from, end);
    walls.iter().all(|w| matches!(segment_intersect(sight, w.seg), SegmentIntersection::None))
}

/// Richness of visible feature sites plus Poisson clutter.
pub fn count_features<R: Rng + ?Sized>(pose: Pose2, world: &World, cfg: &SensorConfig, rng: &mut R) -> u32 {
    let origin = pose.position();
    let reach = cfg.ranges.get(cfg.active_illumination(world)).hi;
    let half_fov = 0.5 * cfg.fov();
    let walls = world.walls();
    let visible: u32 = world
        .feature_sites
        .iter()
        .filter(|s| {
            let v = s.p - origin;
            let bearing = crate::geom::normalize_angle(v.y.atan2(v.x) - pose.theta);
            v.norm() <= reach && bearing.abs() <= half_fov && line_of_sight(origin, s.p, &walls)
        })
        .map(|s| s.richness)
        .sum();
    let clutter = if cfg.clutter_rate > 0.0 {
        Poisson::new(cfg.clutter_rate).map(|p| p.sample(rng) as u32).unwrap_or(0)
    } else {
        0
    };
    visible + clutter
}
