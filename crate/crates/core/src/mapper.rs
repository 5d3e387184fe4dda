//! Scan polygonalization, map fusion and frontier extraction.
//!
//! A scan becomes a star-shaped sector polygon around the sensor origin.
//! Edges between adjacent wall returns are `Obstacle`; everything that only
//! bounds what the sensor saw (range-limited arcs, the two radial sides,
//! depth discontinuities) is `Free`. The map is the running union of those
//! sectors, and its `Free` boundary chains are the frontiers.
//!
//! Calling the free chains frontiers, and steering toward them, is a
//! reconstruction of the goal mechanism rather than a documented one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clip::{boolean_op, snap_vertices, BoolOp, ClipError, EdgeLabel, LabeledPolygon, LabeledRing, PolygonMap};
use crate::geom::{simplify_polyline, Point2, Pose2, Ring};
use crate::sensor::{RayReturn, Scan};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapperError {
    #[error("scan has only {0} usable endpoints")]
    DegenerateScan(usize),
    #[error(transparent)]
    Clip(#[from] ClipError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapperConfig {
    pub simplify_tol: f64,
    /// Adjacent wall returns further apart than this are a depth jump, not a wall.
    pub obstacle_gap_max: f64,
    pub min_frontier_length: f64,
    pub snap_grid: f64,
}

impl Default for MapperConfig {
    fn default() -> Self {
        MapperConfig { simplify_tol: 0.02, obstacle_gap_max: 0.5, min_frontier_length: 0.4, snap_grid: 1e-9 }
    }
}

/// A maximal chain of consecutive `Free` edges on the map boundary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Frontier {
    pub chain: Vec<Point2>,
    pub length: f64,
    /// Length-weighted mean of the edge midpoints.
    pub centroid: Point2,
    /// The point halfway along the chain; lies on the boundary.
    pub anchor: Point2,
    /// Length-weighted outward normal (unit, or zero for a closed chain).
    pub normal: Point2,
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Hit,
    Open,
}

/// Sector polygon of `scan` placed at `pose_est`.
pub fn scan_to_polygon(scan: &Scan, pose_est: Pose2, cfg: &MapperConfig) -> Result<LabeledPolygon, MapperError> {
    let n = scan.ranges.len();
    let valid = |i: usize| scan.hit[i] != RayReturn::Dropout;
    let mut ends: Vec<(f64, f64, Kind)> = Vec::with_capacity(n);
    for i in 0..n {
        let kind = match scan.hit[i] {
            RayReturn::ObstacleHit | RayReturn::GhostHit => Kind::Hit,
            RayReturn::MaxRange => Kind::Open,
            RayReturn::Dropout => {
                let left = (i.saturating_sub(2)..i).rev().find(|&j| valid(j));
                let right = (i + 1..(i + 3).min(n)).find(|&k| valid(k));
                if let (Some(j), Some(k)) = (left, right) {
                    let t = (i - j) as f64 / (k - j) as f64;
                    let r = scan.ranges[j] + (scan.ranges[k] - scan.ranges[j]) * t;
                    ends.push((scan.angles[i], r, Kind::Open));
                }
                continue;
            }
        };
        ends.push((scan.angles[i], scan.ranges[i], kind));
    }
    if ends.len() < 3 {
        return Err(MapperError::DegenerateScan(ends.len()));
    }

    let origin = pose_est.position();
    let mut pts = vec![origin];
    let mut labels = vec![EdgeLabel::Free];
    for (i, &(a, r, kind)) in ends.iter().enumerate() {
        let p = origin + Point2::from_polar(r, pose_est.theta + a);
        pts.push(p);
        let label = match ends.get(i + 1) {
            Some(&(a2, r2, Kind::Hit)) if kind == Kind::Hit => {
                let q = origin + Point2::from_polar(r2, pose_est.theta + a2);
                if p.dist(q) <= cfg.obstacle_gap_max {
                    EdgeLabel::Obstacle
                } else {
                    EdgeLabel::Free
                }
            }
            _ => EdgeLabel::Free,
        };
        labels.push(label);
    }

    let raw = || -> Result<LabeledPolygon, MapperError> {
        let ring = Ring::new(pts.clone()).map_err(|_| MapperError::DegenerateScan(ends.len()))?;
        Ok(LabeledPolygon::new(LabeledRing::new(ring, labels.clone())?, vec![]))
    };
    if cfg.simplify_tol <= 0.0 {
        return raw();
    }
    let (sp, sl) = simplify_runs(&pts, &labels, cfg.simplify_tol);
    match Ring::new(sp) {
        Ok(ring) if ring.is_simple() => Ok(LabeledPolygon::new(LabeledRing::new(ring, sl)?, vec![])),
        _ => raw(),
    }
}

/// Douglas–Peucker on each maximal same-label run; vertex 0 always stays.
fn simplify_runs(pts: &[Point2], labels: &[EdgeLabel], tol: f64) -> (Vec<Point2>, Vec<EdgeLabel>) {
    let n = pts.len();
    let mut out_p = Vec::new();
    let mut out_l = Vec::new();
    let mut s = 0;
    while s < n {
        let mut t = s + 1;
        while t < n && labels[t] == labels[s] {
            t += 1;
        }
        let run: Vec<Point2> = (s..=t).map(|k| pts[k % n]).collect();
        let simp = simplify_polyline(&run, tol);
        for p in &simp[..simp.len() - 1] {
            out_p.push(*p);
            out_l.push(labels[s]);
        }
        s = t;
    }
    (out_p, out_l)
}

/// Unions `scan_poly` into `map` and snaps the result.
pub fn integrate_scan(map: &PolygonMap, scan_poly: &LabeledPolygon, grid: f64) -> Result<PolygonMap, MapperError> {
    let merged = boolean_op(map, &PolygonMap::single(scan_poly.clone()), BoolOp::Union)?;
    Ok(snap_vertices(&merged, grid))
}

/// Every maximal `Free` chain of every ring, unfiltered.
pub fn free_chains(map: &PolygonMap) -> Vec<Frontier> {
    let mut out = Vec::new();
    for ring in map.rings() {
        let v = ring.ring().vertices();
        let labels = ring.labels();
        let n = v.len();
        let Some(start) = (0..n).find(|&i| labels[i] == EdgeLabel::Obstacle) else {
            let mut chain = v.to_vec();
            chain.push(v[0]);
            out.push(frontier_from_chain(chain));
            continue;
        };
        let mut k = 1;
        while k <= n {
            let i = (start + k) % n;
            if labels[i] != EdgeLabel::Free {
                k += 1;
                continue;
            }
            let mut chain = vec![v[i]];
            while k <= n && labels[(start + k) % n] == EdgeLabel::Free {
                chain.push(v[(start + k + 1) % n]);
                k += 1;
            }
            out.push(frontier_from_chain(chain));
        }
    }
    out
}

fn frontier_from_chain(chain: Vec<Point2>) -> Frontier {
    let mut length = 0.0;
    let mut weighted = Point2::new(0.0, 0.0);
    let mut normal = Point2::new(0.0, 0.0);
    for w in chain.windows(2) {
        let d = w[1] - w[0];
        let l = d.norm();
        length += l;
        weighted = weighted + (w[0] + w[1]) * (0.5 * l);
        // Right-hand side of a boundary edge is outside the map.
        normal = normal + Point2::new(d.y, -d.x);
    }
    let centroid = if length > 0.0 { weighted * (1.0 / length) } else { chain[0] };
    let normal = if normal.norm() > 1e-9 * length.max(1e-12) { normal.normalized() } else { Point2::new(0.0, 0.0) };
    let mut anchor = chain[0];
    let mut rest = 0.5 * length;
    for w in chain.windows(2) {
        let l = w[0].dist(w[1]);
        if rest <= l {
            anchor = if l > 0.0 { w[0].lerp(w[1], rest / l) } else { w[0] };
            break;
        }
        rest -= l;
    }
    Frontier { chain, length, centroid, anchor, normal }
}

impl Frontier {
    /// Cuts the chain into `ceil(length / max_len)` pieces of equal length.
    pub fn split(&self, max_len: f64) -> Vec<Frontier> {
        let k = (self.length / max_len).ceil() as usize;
        if k <= 1 || self.chain.len() < 2 {
            return vec![self.clone()];
        }
        let step = self.length / k as f64;
        let mut pieces = Vec::with_capacity(k);
        let mut cur = vec![self.chain[0]];
        let mut need = step;
        for w in self.chain.windows(2) {
            let (mut a, b) = (w[0], w[1]);
            let mut l = a.dist(b);
            while l >= need && pieces.len() + 1 < k {
                let cut = a.lerp(b, need / l);
                cur.push(cut);
                pieces.push(frontier_from_chain(std::mem::replace(&mut cur, vec![cut])));
                l -= need;
                a = cut;
                need = step;
            }
            need -= l;
            cur.push(b);
        }
        pieces.push(frontier_from_chain(cur));
        pieces
    }
}

/// Free chains at least `min_length` long, longest first.
pub fn extract_frontiers(map: &PolygonMap, min_length: f64) -> Vec<Frontier> {
    let mut f: Vec<Frontier> = free_chains(map).into_iter().filter(|c| c.length >= min_length).collect();
    f.sort_by(|a, b| b.length.total_cmp(&a.length));
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Segment;

    fn scan(ranges: Vec<f64>, hit: Vec<RayReturn>, fov_deg: f64) -> Scan {
        let n = ranges.len();
        let fov = fov_deg.to_radians();
        let angles = (0..n).map(|i| -0.5 * fov + fov * i as f64 / (n - 1) as f64).collect();
        Scan {
            pose_true: Pose2::default(),
            angles,
            max_ranges: ranges.clone(),
            ranges,
            hit,
            feature_count: 0,
            timestamp: 0.0,
        }
    }

    fn exact() -> MapperConfig {
        MapperConfig { simplify_tol: 0.0, ..MapperConfig::default() }
    }

    #[test]
    fn open_sector_area() {
        let s = scan(vec![5.0; 141], vec![RayReturn::MaxRange; 141], 70.0);
        let poly = scan_to_polygon(&s, Pose2::default(), &MapperConfig::default()).unwrap();
        let sector = 70.0 / 360.0 * std::f64::consts::PI * 25.0;
        assert!((sector - 15.27).abs() < 0.01);
        // Chords lose at most the sagitta times the arc; tolerance bounds extra loss.
        assert!((poly.area() - sector).abs() < 0.02 * 5.0 * 70f64.to_radians());
        assert!(poly.outer.labels().iter().all(|l| *l == EdgeLabel::Free));
    }

    #[test]
    fn flat_wall_edges_are_obstacles() {
        let n = 141;
        let fov = 70f64.to_radians();
        let ranges = (0..n).map(|i| 2.0 / (-0.5 * fov + fov * i as f64 / (n - 1) as f64).cos()).collect();
        let s = scan(ranges, vec![RayReturn::ObstacleHit; n], 70.0);
        let poly = scan_to_polygon(&s, Pose2::default(), &MapperConfig::default()).unwrap();
        // Origin plus the two wall ends survive simplification.
        assert_eq!(poly.outer.ring().len(), 3);
        for (seg, label) in poly.outer.labeled_edges() {
            let on_wall = (seg.a.x - 2.0).abs() < 1e-9 && (seg.b.x - 2.0).abs() < 1e-9;
            assert_eq!(label, if on_wall { EdgeLabel::Obstacle } else { EdgeLabel::Free });
        }
    }

    #[test]
    fn five_ray_alternation_by_hand() {
        use RayReturn::*;
        let s = scan(vec![1.0, 1.0, 1.0, 2.0, 1.0], vec![ObstacleHit, ObstacleHit, MaxRange, ObstacleHit, ObstacleHit], 40.0);
        let poly = scan_to_polygon(&s, Pose2::default(), &exact()).unwrap();
        // origin→e0, e0→e1, e1→e2, e2→e3, e3→e4, e4→origin
        use EdgeLabel::*;
        assert_eq!(poly.outer.labels(), &[Free, Obstacle, Free, Free, Free, Free]);
        // e3 at 2 m and e4 at 1 m are a depth jump, hence Free; closer neighbors stay Obstacle.
        let s = scan(vec![1.0, 1.0, 1.0, 1.1, 1.0], vec![ObstacleHit, ObstacleHit, MaxRange, ObstacleHit, ObstacleHit], 40.0);
        let poly = scan_to_polygon(&s, Pose2::default(), &exact()).unwrap();
        assert_eq!(poly.outer.labels(), &[Free, Obstacle, Free, Free, Obstacle, Free]);
    }

    #[test]
    fn dropout_interpolated_or_skipped() {
        use RayReturn::*;
        let s = scan(vec![1.0, 9.0, 3.0, 9.0, 9.0, 9.0, 1.0], vec![ObstacleHit, Dropout, ObstacleHit, Dropout, Dropout, Dropout, ObstacleHit], 60.0);
        let poly = scan_to_polygon(&s, Pose2::default(), &exact()).unwrap();
        // Rays 1 and 4 interpolate to 2 m; rays 3 and 5 lack a valid neighbor on one side.
        let v = poly.outer.ring().vertices();
        assert_eq!(v.len(), 6);
        assert!((v[2].norm() - 2.0).abs() < 1e-12);
        assert!((v[4].norm() - 2.0).abs() < 1e-12);
        assert!((v[4].y.atan2(v[4].x) - 10f64.to_radians()).abs() < 1e-12);
        assert!(poly.outer.labels().iter().all(|l| *l == EdgeLabel::Free));
    }

    #[test]
    fn degenerate_scan() {
        let s = scan(vec![1.0; 4], vec![RayReturn::Dropout; 4], 60.0);
        assert_eq!(scan_to_polygon(&s, Pose2::default(), &exact()), Err(MapperError::DegenerateScan(0)));
    }

    #[test]
    fn integrate_identity_and_idempotence() {
        let s = scan(vec![3.0; 31], vec![RayReturn::MaxRange; 31], 70.0);
        let poly = scan_to_polygon(&s, Pose2::new(1.0, 2.0, 0.3), &MapperConfig::default()).unwrap();
        let m1 = integrate_scan(&PolygonMap::empty(), &poly, 1e-9).unwrap();
        assert!((m1.total_area() - poly.area()).abs() < 1e-9);
        let m2 = integrate_scan(&m1, &poly, 1e-9).unwrap();
        assert!((m2.total_area() - m1.total_area()).abs() < 1e-9);
        assert_eq!(m2.vertex_count(), m1.vertex_count());
    }

    #[test]
    fn single_sector_frontier_conservation() {
        let s = scan(vec![4.0; 141], vec![RayReturn::MaxRange; 141], 70.0);
        let poly = scan_to_polygon(&s, Pose2::default(), &MapperConfig::default()).unwrap();
        let map = PolygonMap::single(poly);
        let f = extract_frontiers(&map, 0.4);
        assert_eq!(f.len(), 1);
        let total: f64 = f.iter().map(|c| c.length).sum();
        assert!((total - map.label_length(EdgeLabel::Free)).abs() < 1e-9);
        assert_eq!(f[0].chain.first(), f[0].chain.last());
    }

    #[test]
    fn split_preserves_length() {
        let s = scan(vec![4.0; 141], vec![RayReturn::MaxRange; 141], 70.0);
        let map = PolygonMap::single(scan_to_polygon(&s, Pose2::default(), &MapperConfig::default()).unwrap());
        let f = &extract_frontiers(&map, 0.4)[0];
        let parts = f.split(1.5);
        assert_eq!(parts.len(), (f.length / 1.5).ceil() as usize);
        let total: f64 = parts.iter().map(|p| p.length).sum();
        assert!((total - f.length).abs() < 1e-9);
        assert!(parts.iter().all(|p| (p.length - f.length / parts.len() as f64).abs() < 1e-9));
        for w in parts.windows(2) {
            assert_eq!(w[0].chain.last(), w[1].chain.first());
        }
        assert_eq!(f.split(100.0), vec![f.clone()]);
    }

    #[test]
    fn obstacle_only_map_has_no_frontiers() {
        let ring = Ring::new(vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)]).unwrap();
        let map = PolygonMap::single(LabeledPolygon::new(LabeledRing::uniform(ring, EdgeLabel::Obstacle), vec![]));
        assert!(extract_frontiers(&map, 0.0).is_empty());
    }

    #[test]
    fn frontier_runs_wrap_around() {
        use EdgeLabel::*;
        let ring = Ring::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(2.0, 1.0),
            Point2::new(0.0, 1.0),
        ])
        .unwrap();
        let map = PolygonMap::single(LabeledPolygon::new(LabeledRing::new(ring, vec![Free, Obstacle, Obstacle, Free]).unwrap(), vec![]));
        let f = extract_frontiers(&map, 0.0);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].chain, vec![Point2::new(0.0, 1.0), Point2::new(0.0, 0.0), Point2::new(2.0, 0.0)]);
        assert!((f[0].length - 3.0).abs() < 1e-12);
        assert!((f[0].anchor.dist(Point2::new(0.5, 0.0))) < 1e-12);
        // Outward normals (-1, 0)·1 + (0, -1)·2, normalized.
        let expect = Point2::new(-1.0, -2.0).normalized();
        assert!(f[0].normal.dist(expect) < 1e-12);
        let seg = Segment::new(Point2::new(0.0, 0.0), Point2::new(2.0, 0.0));
        assert!(seg.distance_to_point(f[0].anchor) < 1e-12);
    }
}
