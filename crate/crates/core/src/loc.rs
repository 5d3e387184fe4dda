//! Localization stack model.
//!
//! Nothing here extracts features or optimizes a graph. Wheel odometry drifts
//! with a systematic heading bias, visual odometry works only above a feature
//! count, scan registration succeeds with a probability that ramps with
//! field-of-view overlap, and loop closures shrink accumulated error. The
//! pose graph is just a list of nodes whose length drives update latency.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{normalize_angle, Pose2, PoseDelta};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LocError {
    #[error("invalid odometry config: {0}")]
    InvalidOdom(&'static str),
    #[error("invalid slam config: {0}")]
    InvalidSlam(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OdomConfig {
    /// σ per meter traveled.
    pub wheel_trans_noise: f64,
    /// σ per radian turned.
    pub wheel_rot_noise: f64,
    /// Radians of heading drift per meter.
    pub wheel_rot_bias: f64,
    pub vo_enabled: bool,
    pub vo_feature_min: u32,
    pub vo_trans_noise: f64,
    pub vo_rot_noise: f64,
}

impl Default for OdomConfig {
    fn default() -> Self {
        OdomConfig {
            wheel_trans_noise: 0.02,
            wheel_rot_noise: 0.02,
            wheel_rot_bias: 0.002,
            vo_enabled: true,
            vo_feature_min: 30,
            vo_trans_noise: 0.005,
            vo_rot_noise: 0.005,
        }
    }
}

impl OdomConfig {
    pub fn noiseless() -> Self {
        OdomConfig {
            wheel_trans_noise: 0.0,
            wheel_rot_noise: 0.0,
            wheel_rot_bias: 0.0,
            vo_trans_noise: 0.0,
            vo_rot_noise: 0.0,
            ..OdomConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), LocError> {
        let sigmas = [self.wheel_trans_noise, self.wheel_rot_noise, self.vo_trans_noise, self.vo_rot_noise];
        if sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(LocError::InvalidOdom("noise sigmas must be finite and non-negative"));
        }
        if !self.wheel_rot_bias.is_finite() {
            return Err(LocError::InvalidOdom("wheel_rot_bias must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlamConfig {
    pub update_budget: f64,
    pub base_update: f64,
    pub per_node_cost: f64,
    pub node_period: f64,
    pub overlap_full_match: f64,
    pub overlap_zero_match: f64,
    pub loop_radius: f64,
    pub loop_feature_min: u32,
    /// Fraction of the pose error removed by an accepted registration.
    pub gamma_reg: f64,
    /// Fraction of the pose error removed by a loop closure.
    pub gamma_loop: f64,
    /// Most recent nodes that are never loop-closure candidates.
    pub loop_min_node_gap: usize,
    pub registration_enabled: bool,
    pub loop_closure_enabled: bool,
}

impl Default for SlamConfig {
    fn default() -> Self {
        SlamConfig {
            update_budget: 0.5,
            base_update: 0.1,
            per_node_cost: 0.002,
            node_period: 1.0,
            overlap_full_match: 0.9,
            overlap_zero_match: 0.3,
            loop_radius: 0.75,
            loop_feature_min: 30,
            gamma_reg: 0.5,
            gamma_loop: 0.9,
            loop_min_node_gap: 30,
            registration_enabled: true,
            loop_closure_enabled: true,
        }
    }
}

impl SlamConfig {
    pub fn validate(&self) -> Result<(), LocError> {
        if !(0.0 <= self.overlap_zero_match
            && self.overlap_zero_match < self.overlap_full_match
            && self.overlap_full_match <= 1.0)
        {
            return Err(LocError::InvalidSlam("need 0 <= overlap_zero_match < overlap_full_match <= 1"));
        }
        let times = [self.update_budget, self.base_update, self.per_node_cost, self.node_period];
        if times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(LocError::InvalidSlam("time constants must be positive"));
        }
        if !(0.0..=1.0).contains(&self.gamma_reg) || !(0.0..=1.0).contains(&self.gamma_loop) {
            return Err(LocError::InvalidSlam("gamma_reg and gamma_loop must lie in [0, 1]"));
        }
        if !(self.loop_radius >= 0.0) {
            return Err(LocError::InvalidSlam("loop_radius must be non-negative"));
        }
        Ok(())
    }
}

/// Named parameter sets spanning the slow-but-readable to fast-but-fragile
/// range of visual SLAM behaviors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocPreset {
    SlowReadable,
    Balanced,
    FastLosesItself,
}

impl LocPreset {
    pub fn configs(self) -> (OdomConfig, SlamConfig) {
        let odom = OdomConfig::default();
        let slam = SlamConfig::default();
        match self {
            LocPreset::Balanced => (odom, slam),
            LocPreset::SlowReadable => (
                odom,
                SlamConfig { base_update: 0.3, per_node_cost: 0.004, overlap_zero_match: 0.2, ..slam },
            ),
            LocPreset::FastLosesItself => (
                OdomConfig { vo_feature_min: 60, ..odom },
                SlamConfig { base_update: 0.05, per_node_cost: 0.001, overlap_zero_match: 0.5, gamma_loop: 0.6, ..slam },
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub est: Pose2,
    /// Ground truth at insertion, standing in for appearance-based place recognition.
    pub truth: Pose2,
    pub feature_count: u32,
    pub timestamp: f64,
}

/// A world-frame pose correction, added to the estimate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Correction {
    pub dx: f64,
    pub dy: f64,
    pub dtheta: f64,
}

impl Correction {
    pub fn apply(&self, p: Pose2) -> Pose2 {
        Pose2::new(p.x + self.dx, p.y + self.dy, p.theta + self.dtheta)
    }

    /// The correction removing fraction `gamma` of the error of `est` against `truth`.
    pub fn toward(est: Pose2, truth: Pose2, gamma: f64) -> Correction {
        Correction {
            dx: gamma * (truth.x - est.x),
            dy: gamma * (truth.y - est.y),
            dtheta: gamma * normalize_angle(truth.theta - est.theta),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlamState {
    pub nodes: Vec<Node>,
    pub est_pose: Pose2,
    pub sim_time: f64,
}

impl SlamState {
    pub fn new(start: Pose2) -> Self {
        SlamState { nodes: Vec::new(), est_pose: start, sim_time: 0.0 }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Estimate minus truth, world frame, heading wrapped.
    pub fn drift(&self, truth: Pose2) -> Correction {
        Correction {
            dx: self.est_pose.x - truth.x,
            dy: self.est_pose.y - truth.y,
            dtheta: normalize_angle(self.est_pose.theta - truth.theta),
        }
    }

    pub fn add_node(&mut self, truth: Pose2, feature_count: u32) {
        self.nodes.push(Node { est: self.est_pose, truth, feature_count, timestamp: self.sim_time });
    }

    fn correct(&mut self, truth: Pose2, gamma: f64) -> Correction {
        let c = Correction::toward(self.est_pose, truth, gamma);
        self.est_pose = c.apply(self.est_pose);
        c
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    sigma * z
}

/// Wheel odometry reading for a true body-frame increment.
pub fn wheel_odom_step<R: Rng + ?Sized>(true_delta: PoseDelta, cfg: &OdomConfig, rng: &mut R) -> PoseDelta {
    let dist = true_delta.distance();
    let turn = true_delta.dtheta.abs();
    let nx = gaussian(rng, cfg.wheel_trans_noise * dist);
    let ny = gaussian(rng, cfg.wheel_trans_noise * dist);
    let nt = gaussian(rng, cfg.wheel_rot_noise * turn);
    PoseDelta::new(
        true_delta.dx + nx,
        true_delta.dy + ny,
        true_delta.dtheta + nt + cfg.wheel_rot_bias * dist,
    )
}

/// Visual odometry reading, absent when too few features are visible.
pub fn visual_odom_step<R: Rng + ?Sized>(
    feature_count: u32,
    true_delta: PoseDelta,
    cfg: &OdomConfig,
    rng: &mut R,
) -> Option<PoseDelta> {
    if !cfg.vo_enabled || feature_count < cfg.vo_feature_min {
        return None;
    }
    let t = Normal::new(0.0, cfg.vo_trans_noise).ok()?;
    let r = Normal::new(0.0, cfg.vo_rot_noise).ok()?;
    Some(PoseDelta::new(
        true_delta.dx + t.sample(rng),
        true_delta.dy + t.sample(rng),
        true_delta.dtheta + r.sample(rng),
    ))
}

/// Shared fraction of two equal fields of view whose headings differ.
pub fn match_overlap(prev_heading: f64, cur_heading: f64, fov_deg: f64) -> f64 {
    // |a - b| is exactly symmetric; wrapping it keeps that.
    let r = (cur_heading - prev_heading).abs().rem_euclid(std::f64::consts::TAU);
    let d = r.min(std::f64::consts::TAU - r).to_degrees();
    ((fov_deg - d) / fov_deg).max(0.0)
}

pub fn registration_probability(overlap: f64, feature_count: u32, slam: &SlamConfig, odom: &OdomConfig) -> f64 {
    let ramp = (overlap - slam.overlap_zero_match) / (slam.overlap_full_match - slam.overlap_zero_match);
    let features = if odom.vo_feature_min == 0 {
        1.0
    } else {
        (feature_count as f64 / odom.vo_feature_min as f64).min(1.0)
    };
    ramp.clamp(0.0, 1.0) * features
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Registration {
    Accepted(Correction),
    Rejected,
}

/// Attempts to align `truth`'s scan against the map; on success the estimate
/// moves toward `truth`.
pub fn register_scan<R: Rng + ?Sized>(
    state: &mut SlamState,
    truth: Pose2,
    feature_count: u32,
    overlap: f64,
    slam: &SlamConfig,
    odom: &OdomConfig,
    rng: &mut R,
) -> Registration {
    let p = registration_probability(overlap, feature_count, slam, odom);
    let u: f64 = rng.random();
    if u < p {
        Registration::Accepted(state.correct(truth, slam.gamma_reg))
    } else {
        Registration::Rejected
    }
}

/// Seconds one map update takes with `node_count` nodes in the graph.
pub fn update_duration(node_count: usize, cfg: &SlamConfig) -> f64 {
    cfg.base_update + cfg.per_node_cost * node_count as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoopClosure {
    Closed { node: usize, correction: Correction },
    None,
}

/// Closes a loop against the oldest eligible node near the current position.
pub fn try_loop_closure(state: &mut SlamState, truth: Pose2, feature_count: u32, cfg: &SlamConfig) -> LoopClosure {
    if feature_count < cfg.loop_feature_min {
        return LoopClosure::None;
    }
    let eligible = state.nodes.len().saturating_sub(cfg.loop_min_node_gap);
    let here = truth.position();
    let hit = state.nodes[..eligible].iter().position(|n| n.truth.position().dist(here) <= cfg.loop_radius);
    match hit {
        Some(node) => LoopClosure::Closed { node, correction: state.correct(truth, cfg.gamma_loop) },
        None => LoopClosure::None,
    }
}

/// Advances simulated time while the robot turns at `omega_dps` deg/s;
/// returns the degrees rotated.
pub fn advance_time(state: &mut SlamState, omega_dps: f64, duration: f64) -> f64 {
    state.sim_time += duration;
    omega_dps * duration
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn biased(b: f64) -> OdomConfig {
        OdomConfig { wheel_rot_bias: b, ..OdomConfig::noiseless() }
    }

    #[test]
    fn wheel_odometry_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(wheel_odom_step(PoseDelta::ZERO, &OdomConfig::default(), &mut rng), PoseDelta::ZERO);
        let d = wheel_odom_step(PoseDelta::new(1.0, 0.0, 0.0), &biased(0.01), &mut rng);
        assert_eq!(d.dtheta, 0.01);
        assert_eq!(d.dx, 1.0);
    }

    #[test]
    fn ten_meters_of_biased_dead_reckoning() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cfg = biased(0.01);
        let mut est = Pose2::default();
        for _ in 0..100 {
            est = est.compose(wheel_odom_step(PoseDelta::new(0.1, 0.0, 0.0), &cfg, &mut rng));
        }
        assert!((est.theta - 0.1).abs() < 1e-12);
        // Each step translates along the heading reached so far: Σ 0.1·sin(0.001·j), j < 100.
        let (n, d) = (100.0f64, 0.001f64);
        let lateral = 0.1 * (n * d / 2.0).sin() * ((n - 1.0) * d / 2.0).sin() / (d / 2.0).sin();
        assert!((est.y - lateral).abs() < 1e-12, "{} vs {lateral}", est.y);
        let along = 0.1 * (n * d / 2.0).sin() * ((n - 1.0) * d / 2.0).cos() / (d / 2.0).sin();
        assert!((est.x - along).abs() < 1e-12);
    }

    #[test]
    fn visual_odometry_gate_is_inclusive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = OdomConfig::noiseless();
        let d = PoseDelta::new(0.1, 0.02, 0.05);
        assert_eq!(visual_odom_step(0, d, &cfg, &mut rng), None);
        assert_eq!(visual_odom_step(29, d, &cfg, &mut rng), None);
        assert_eq!(visual_odom_step(30, d, &cfg, &mut rng), Some(d));
        let off = OdomConfig { vo_enabled: false, ..cfg };
        assert_eq!(visual_odom_step(500, d, &off, &mut rng), None);
    }

    #[test]
    fn overlap_examples() {
        let r = 34f64.to_radians();
        assert!((match_overlap(0.0, r, 70.0) - 36.0 / 70.0).abs() < 1e-9);
        assert_eq!(match_overlap(1.3, 1.3, 70.0), 1.0);
        assert_eq!(match_overlap(0.0, 70f64.to_radians(), 70.0), 0.0);
        assert_eq!(match_overlap(0.0, 2.5, 70.0), 0.0);
        // Wrap-around: headings either side of ±π.
        assert!((match_overlap(3.1, -3.1, 70.0) - match_overlap(0.0, 0.0831853, 70.0)).abs() < 1e-6);
    }

    #[test]
    fn registration_clamps() {
        let slam = SlamConfig::default();
        let odom = OdomConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let truth = Pose2::new(1.0, 0.0, 0.0);
        for _ in 0..200 {
            let mut s = SlamState::new(Pose2::new(1.5, 0.2, 0.1));
            assert!(matches!(register_scan(&mut s, truth, 100, 1.0, &slam, &odom, &mut rng), Registration::Accepted(_)));
            assert!((s.drift(truth).dx - 0.25).abs() < 1e-12);
            let mut s = SlamState::new(Pose2::new(1.5, 0.2, 0.1));
            assert_eq!(register_scan(&mut s, truth, 100, 0.3, &slam, &odom, &mut rng), Registration::Rejected);
            assert_eq!(s.est_pose, Pose2::new(1.5, 0.2, 0.1));
        }
        let p = registration_probability(0.514, 100, &slam, &odom);
        assert!((p - 0.214 / 0.6).abs() < 1e-12);
        assert!((registration_probability(0.514, 15, &slam, &odom) - p / 2.0).abs() < 1e-12);
    }

    #[test]
    fn update_duration_anchors() {
        let cfg = SlamConfig::default();
        assert_eq!(update_duration(0, &cfg), 0.1);
        let first = (0..1000).find(|&n| update_duration(n, &cfg) >= cfg.update_budget).unwrap();
        assert_eq!(first, 200);
        assert!((update_duration(400, &cfg) - 0.9).abs() < 1e-12);
        assert!((0..1000).all(|n| update_duration(n + 1, &cfg) > update_duration(n, &cfg)));
    }

    #[test]
    fn loop_closure_examples() {
        let cfg = SlamConfig { loop_min_node_gap: 0, ..SlamConfig::default() };
        let start = Pose2::default();
        let mut s = SlamState::new(start);
        assert_eq!(try_loop_closure(&mut s, start, 100, &cfg), LoopClosure::None);
        s.add_node(start, 100);
        s.est_pose = Pose2::new(0.4, -0.3, 0.2);
        assert_eq!(try_loop_closure(&mut s, start, 5, &cfg), LoopClosure::None);
        assert!(matches!(try_loop_closure(&mut s, start, 100, &cfg), LoopClosure::Closed { node: 0, .. }));
        let d = s.drift(start);
        assert!((d.dx - 0.04).abs() < 1e-12 && (d.dy + 0.03).abs() < 1e-12);
        // Recent nodes are excluded by the gap.
        let gapped = SlamConfig { loop_min_node_gap: 1, ..cfg };
        assert_eq!(try_loop_closure(&mut s, start, 100, &gapped), LoopClosure::None);
    }

    #[test]
    fn rotation_during_update() {
        let mut s = SlamState::new(Pose2::default());
        assert_eq!(advance_time(&mut s, 17.0, 2.0), 34.0);
        assert_eq!(advance_time(&mut s, 0.0, 3.0), 0.0);
        let deg = advance_time(&mut s, 17.0, 0.5);
        assert_eq!(deg, 8.5);
        assert!((match_overlap(0.0, deg.to_radians(), 70.0) - 61.5 / 70.0).abs() < 1e-12);
        assert_eq!(s.sim_time, 5.5);
    }

    #[test]
    fn presets_validate() {
        for p in [LocPreset::SlowReadable, LocPreset::Balanced, LocPreset::FastLosesItself] {
            let (o, s) = p.configs();
            o.validate().unwrap();
            s.validate().unwrap();
        }
    }
}
