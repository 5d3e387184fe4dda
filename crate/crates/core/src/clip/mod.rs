//! Boolean operations on edge-labeled polygon sets.
//!
//! Every map edge carries an [`EdgeLabel`]: `Obstacle` when it came from a
//! sensor return, `Free` when it only bounds what the sensor has seen so far.
//! The sweep in [`sweep`] carries the label of each source edge through
//! subdivision; where edges of both kinds coincide the output edge is
//! `Obstacle`, so a wall seen once is never erased by later free space.
//! This label rule is a reconstruction: the original map-merging variant of
//! Vatti clipping it stands in for is not published in detail.

mod sweep;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Location, Point2, Ring, Segment, EPS_AREA, EPS_PT};
use sweep::{IPt, InEdge};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeLabel {
    Obstacle,
    Free,
}

impl EdgeLabel {
    /// Obstacle dominates Free.
    pub fn merge(self, other: EdgeLabel) -> EdgeLabel {
        if self == EdgeLabel::Obstacle || other == EdgeLabel::Obstacle {
            EdgeLabel::Obstacle
        } else {
            EdgeLabel::Free
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoolOp {
    Union,
    Intersection,
    Difference,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClipError {
    #[error("polygon {polygon}, ring {ring}: {reason}")]
    DegenerateInput { polygon: usize, ring: usize, reason: String },
    #[error("label count {labels} does not match vertex count {vertices}")]
    LabelMismatch { labels: usize, vertices: usize },
}

/// A ring plus one label per edge (edge `i` runs from vertex `i` to `i + 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRing {
    ring: Ring,
    labels: Vec<EdgeLabel>,
}

impl LabeledRing {
    pub fn new(ring: Ring, labels: Vec<EdgeLabel>) -> Result<Self, ClipError> {
        if labels.len() != ring.len() {
            return Err(ClipError::LabelMismatch { labels: labels.len(), vertices: ring.len() });
        }
        Ok(LabeledRing { ring, labels })
    }

    pub fn uniform(ring: Ring, label: EdgeLabel) -> Self {
        let labels = vec![label; ring.len()];
        LabeledRing { ring, labels }
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn labels(&self) -> &[EdgeLabel] {
        &self.labels
    }

    pub fn signed_area(&self) -> f64 {
        self.ring.signed_area()
    }

    pub fn labeled_edges(&self) -> impl Iterator<Item = (Segment, EdgeLabel)> + '_ {
        self.ring.edges().zip(self.labels.iter().copied())
    }

    /// Reverses vertex order, keeping every label on its geometric edge.
    pub fn reversed(&self) -> LabeledRing {
        let n = self.labels.len();
        let labels = (0..n).map(|j| self.labels[(2 * n - 2 - j) % n]).collect();
        LabeledRing { ring: self.ring.reversed(), labels }
    }

    fn oriented(self, ccw: bool) -> LabeledRing {
        if self.ring.is_ccw() == ccw {
            self
        } else {
            self.reversed()
        }
    }
}

/// One connected region: a counter-clockwise outer ring and clockwise holes.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPolygon {
    pub outer: LabeledRing,
    pub holes: Vec<LabeledRing>,
}

impl LabeledPolygon {
    /// Normalizes ring orientation (outer CCW, holes CW).
    pub fn new(outer: LabeledRing, holes: Vec<LabeledRing>) -> Self {
        LabeledPolygon {
            outer: outer.oriented(true),
            holes: holes.into_iter().map(|h| h.oriented(false)).collect(),
        }
    }

    pub fn area(&self) -> f64 {
        self.outer.signed_area() + self.holes.iter().map(LabeledRing::signed_area).sum::<f64>()
    }

    pub fn rings(&self) -> impl Iterator<Item = &LabeledRing> {
        std::iter::once(&self.outer).chain(self.holes.iter())
    }
}

/// A set of interior-disjoint labeled polygons with cached total area.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolygonMap {
    polygons: Vec<LabeledPolygon>,
    total_area: f64,
}

impl PolygonMap {
    pub fn new(polygons: Vec<LabeledPolygon>) -> Self {
        let total_area = polygons.iter().map(LabeledPolygon::area).sum();
        PolygonMap { polygons, total_area }
    }

    pub fn empty() -> Self {
        PolygonMap::default()
    }

    pub fn single(polygon: LabeledPolygon) -> Self {
        PolygonMap::new(vec![polygon])
    }

    pub fn polygons(&self) -> &[LabeledPolygon] {
        &self.polygons
    }

    pub fn is_empty(&self) -> bool {
        self.polygons.is_empty()
    }

    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    pub fn rings(&self) -> impl Iterator<Item = &LabeledRing> {
        self.polygons.iter().flat_map(LabeledPolygon::rings)
    }

    /// Plain rings of every polygon, for even-odd point queries.
    pub fn plain_rings(&self) -> Vec<Ring> {
        self.rings().map(|r| r.ring.clone()).collect()
    }

    pub fn labeled_edges(&self) -> impl Iterator<Item = (Segment, EdgeLabel)> + '_ {
        self.rings().flat_map(LabeledRing::labeled_edges)
    }

    pub fn label_length(&self, label: EdgeLabel) -> f64 {
        self.labeled_edges().filter(|(_, l)| *l == label).map(|(s, _)| s.length()).sum()
    }

    pub fn locate(&self, p: Point2) -> Location {
        crate::geom::point_in_region(p, &self.plain_rings())
    }

    pub fn vertex_count(&self) -> usize {
        self.rings().map(|r| r.ring.len()).sum()
    }
}

fn input_edges(map: &PolygonMap, operand: usize, out: &mut Vec<InEdge>) -> Result<(), ClipError> {
    for (pi, poly) in map.polygons.iter().enumerate() {
        for (ri, lr) in poly.rings().enumerate() {
            let bad = |reason: String| ClipError::DegenerateInput { polygon: pi, ring: ri, reason };
            let v = lr.ring.vertices();
            if v.len() < 3 {
                return Err(bad(format!("{} vertices", v.len())));
            }
            if lr.labels.len() != v.len() {
                return Err(bad("label count differs from vertex count".into()));
            }
            let mut pts = Vec::with_capacity(v.len());
            for (k, p) in v.iter().enumerate() {
                match (sweep::to_grid(p.x), sweep::to_grid(p.y)) {
                    (Some(x), Some(y)) => pts.push(IPt { x, y }),
                    _ => return Err(bad(format!("vertex {k} is not finite or out of range"))),
                }
            }
            for k in 0..pts.len() {
                out.push(InEdge {
                    a: pts[k],
                    b: pts[(k + 1) % pts.len()],
                    operand,
                    obstacle: lr.labels[k] == EdgeLabel::Obstacle,
                });
            }
        }
    }
    Ok(())
}

/// Boolean combination of two maps under the even-odd rule.
pub fn boolean_op(subject: &PolygonMap, clip: &PolygonMap, op: BoolOp) -> Result<PolygonMap, ClipError> {
    let mut edges = Vec::new();
    input_edges(subject, 0, &mut edges)?;
    input_edges(clip, 1, &mut edges)?;
    let rings = sweep::run(edges, op);
    Ok(assemble(rings))
}

fn to_labeled(r: &sweep::IRing) -> LabeledRing {
    let pts = r
        .pts
        .iter()
        .map(|p| Point2::new(sweep::from_grid(p.x), sweep::from_grid(p.y)))
        .collect();
    let labels = r
        .obstacle
        .iter()
        .map(|&o| if o { EdgeLabel::Obstacle } else { EdgeLabel::Free })
        .collect();
    LabeledRing { ring: Ring::from_vertices_unchecked(pts), labels }
}

fn hole_inside(hole: &sweep::IRing, outer: &sweep::IRing) -> bool {
    let doubled = hole.pts.iter().map(|p| IPt { x: 2 * p.x, y: 2 * p.y });
    let n = hole.pts.len();
    let mids = (0..n).map(|i| {
        let (a, b) = (hole.pts[i], hole.pts[(i + 1) % n]);
        IPt { x: a.x + b.x, y: a.y + b.y }
    });
    for q in doubled.chain(mids) {
        match sweep::locate_doubled(&outer.pts, q) {
            Location::Inside => return true,
            Location::Outside => return false,
            Location::Boundary => {}
        }
    }
    false
}

fn assemble(rings: Vec<sweep::IRing>) -> PolygonMap {
    let (outers, holes): (Vec<_>, Vec<_>) = rings.into_iter().partition(|r| r.twice_area() > 0);
    let mut owned: Vec<Vec<LabeledRing>> = vec![Vec::new(); outers.len()];
    for h in &holes {
        let ha = -h.twice_area();
        let owner = outers
            .iter()
            .enumerate()
            .filter(|(_, o)| o.twice_area() > ha && hole_inside(h, o))
            .min_by_key(|(_, o)| o.twice_area())
            .map(|(i, _)| i);
        debug_assert!(owner.is_some(), "hole without an enclosing ring");
        if let Some(i) = owner {
            owned[i].push(to_labeled(h));
        }
    }
    let polygons = outers
        .iter()
        .zip(owned)
        .map(|(o, holes)| LabeledPolygon { outer: to_labeled(o), holes })
        .collect();
    PolygonMap::new(polygons)
}

/// Labels result edges from the source edges they lie on. A result edge
/// lying on sources of both kinds is `Obstacle`; `None` marks an edge that
/// lies on no source.
pub fn propagate_labels(result_edges: &[Segment], source_edges: &[(Segment, EdgeLabel)]) -> Vec<Option<EdgeLabel>> {
    result_edges
        .iter()
        .map(|e| {
            source_edges
                .iter()
                .filter(|(s, _)| s.distance_to_point(e.a) <= EPS_PT && s.distance_to_point(e.b) <= EPS_PT)
                .map(|(_, l)| *l)
                .reduce(EdgeLabel::merge)
        })
        .collect()
}

fn snap_ring(lr: &LabeledRing, grid: f64) -> Vec<LabeledRing> {
    let snap = |p: Point2| Point2::new((p.x / grid).round() * grid, (p.y / grid).round() * grid);
    let sign = lr.signed_area().signum();
    let mut out = Vec::new();
    let mut work = vec![(lr.ring.vertices().iter().map(|p| snap(*p)).collect::<Vec<_>>(), lr.labels.clone())];
    while let Some((pts, labels)) = work.pop() {
        let (pts, mut labels) = merge_close(pts, labels);
        if pts.len() < 3 {
            continue;
        }
        let area = crate::geom::signed_area(&pts);
        if area.abs() <= EPS_AREA || area.signum() != sign {
            continue;
        }
        let ring = Ring::from_vertices_unchecked(pts);
        let Some(&(i, j, p)) = ring.self_contacts().first() else {
            out.push(LabeledRing { ring, labels });
            continue;
        };
        let mut pts: Vec<Point2> = ring.vertices().to_vec();
        let n = pts.len();
        if j == i + 1 || (i == 0 && j == n - 1) {
            // A spike folding back on itself: drop its tip.
            let tip = if j == i + 1 { j } else { 0 };
            labels[(tip + n - 1) % n] = labels[tip];
            pts.remove(tip);
            labels.remove(tip);
            work.push((pts, labels));
            continue;
        }
        // Pinch: split into the loop i+1..=j and the loop j+1..=i, both through p.
        let p = snap(p);
        let mut a_pts = vec![p];
        a_pts.extend_from_slice(&pts[i + 1..=j]);
        let a_labels = labels[i..=j].to_vec();
        let mut b_pts = vec![p];
        b_pts.extend(pts[j + 1..].iter().chain(&pts[..=i]).copied());
        let mut b_labels = labels[j..].to_vec();
        b_labels.extend_from_slice(&labels[..=i]);
        work.push((b_pts, b_labels));
        work.push((a_pts, a_labels));
    }
    out.reverse();
    out
}

/// Removes every vertex within [`EPS_PT`] of the previous kept one; the
/// merged edge keeps the later label.
fn merge_close(pts: Vec<Point2>, labels: Vec<EdgeLabel>) -> (Vec<Point2>, Vec<EdgeLabel>) {
    let mut kp: Vec<Point2> = Vec::with_capacity(pts.len());
    let mut kl: Vec<EdgeLabel> = Vec::with_capacity(pts.len());
    for (q, l) in pts.into_iter().zip(labels) {
        match kp.last() {
            Some(last) if last.dist(q) <= EPS_PT => *kl.last_mut().unwrap() = l,
            _ => {
                kp.push(q);
                kl.push(l);
            }
        }
    }
    while kp.len() > 1 && kp[0].dist(kp[kp.len() - 1]) <= EPS_PT {
        kp.pop();
        kl.pop();
    }
    (kp, kl)
}

/// Rounds every vertex to a multiple of `grid`, drops rings that become
/// degenerate and splits rings that pinch within the point tolerance. A
/// polygon whose outer ring degenerates is dropped whole.
pub fn snap_vertices(map: &PolygonMap, grid: f64) -> PolygonMap {
    assert!(grid > 0.0, "snap grid must be positive");
    let mut polygons = Vec::new();
    for p in &map.polygons {
        let outers = snap_ring(&p.outer, grid);
        let holes: Vec<LabeledRing> = p.holes.iter().flat_map(|h| snap_ring(h, grid)).collect();
        if outers.len() <= 1 {
            polygons.extend(outers.into_iter().map(|outer| LabeledPolygon { outer, holes: holes.clone() }));
            continue;
        }
        let mut split: Vec<LabeledPolygon> =
            outers.into_iter().map(|outer| LabeledPolygon { outer, holes: Vec::new() }).collect();
        for h in holes {
            let home = split
                .iter()
                .position(|sp| {
                    h.ring.vertices().iter().any(|v| {
                        crate::geom::point_in_region(*v, std::slice::from_ref(&sp.outer.ring)) == Location::Inside
                    })
                })
                .unwrap_or(0);
            split[home].holes.push(h);
        }
        polygons.extend(split);
    }
    PolygonMap::new(polygons)
}

/// JSON debug dump of a [`PolygonMap`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDump {
    pub total_area: f64,
    pub polygons: Vec<PolygonDump>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolygonDump {
    pub outer: Vec<Point2>,
    pub outer_labels: Vec<EdgeLabel>,
    pub holes: Vec<Vec<Point2>>,
    pub hole_labels: Vec<Vec<EdgeLabel>>,
}

impl From<&PolygonMap> for MapDump {
    fn from(map: &PolygonMap) -> Self {
        MapDump {
            total_area: map.total_area,
            polygons: map
                .polygons
                .iter()
                .map(|p| PolygonDump {
                    outer: p.outer.ring.vertices().to_vec(),
                    outer_labels: p.outer.labels.clone(),
                    holes: p.holes.iter().map(|h| h.ring.vertices().to_vec()).collect(),
                    hole_labels: p.holes.iter().map(|h| h.labels.clone()).collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<MapDump> for PolygonMap {
    type Error = ClipError;

    fn try_from(d: MapDump) -> Result<Self, ClipError> {
        let mut polygons = Vec::with_capacity(d.polygons.len());
        for (pi, p) in d.polygons.into_iter().enumerate() {
            let ring = |ri: usize, v: Vec<Point2>, l: Vec<EdgeLabel>| {
                let r = Ring::new(v).map_err(|e| ClipError::DegenerateInput {
                    polygon: pi,
                    ring: ri,
                    reason: e.to_string(),
                })?;
                LabeledRing::new(r, l)
            };
            if p.holes.len() != p.hole_labels.len() {
                return Err(ClipError::LabelMismatch { labels: p.hole_labels.len(), vertices: p.holes.len() });
            }
            let outer = ring(0, p.outer, p.outer_labels)?;
            let holes = p
                .holes
                .into_iter()
                .zip(p.hole_labels)
                .enumerate()
                .map(|(i, (v, l))| ring(i + 1, v, l))
                .collect::<Result<Vec<_>, _>>()?;
            polygons.push(LabeledPolygon::new(outer, holes));
        }
        Ok(PolygonMap::new(polygons))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64, label: EdgeLabel) -> PolygonMap {
        let r = Ring::new(vec![p(x0, y0), p(x1, y0), p(x1, y1), p(x0, y1)]).unwrap();
        PolygonMap::single(LabeledPolygon::new(LabeledRing::uniform(r, label), vec![]))
    }

    #[test]
    fn union_of_offset_squares() {
        let a = rect(0.0, 0.0, 1.0, 1.0, EdgeLabel::Free);
        let b = rect(0.5, 0.5, 1.5, 1.5, EdgeLabel::Free);
        let u = boolean_op(&a, &b, BoolOp::Union).unwrap();
        assert_eq!(u.polygons().len(), 1);
        assert!((u.total_area() - 1.75).abs() < 1e-12);
    }

    #[test]
    fn union_with_empty_is_identity() {
        let mut a = rect(0.0, 0.0, 2.0, 1.0, EdgeLabel::Free);
        // Mixed labels on one ring.
        let r = a.polygons[0].outer.ring.clone();
        let labels = vec![EdgeLabel::Obstacle, EdgeLabel::Free, EdgeLabel::Obstacle, EdgeLabel::Free];
        a = PolygonMap::single(LabeledPolygon::new(LabeledRing::new(r, labels).unwrap(), vec![]));
        let u = boolean_op(&a, &PolygonMap::empty(), BoolOp::Union).unwrap();
        assert!((u.total_area() - a.total_area()).abs() < 1e-12);
        let mut got: Vec<_> = u.labeled_edges().map(|(s, l)| (s.midpoint().x, s.midpoint().y, l)).collect();
        let mut want: Vec<_> = a.labeled_edges().map(|(s, l)| (s.midpoint().x, s.midpoint().y, l)).collect();
        got.sort_by(|x, y| x.partial_cmp(y).unwrap());
        want.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            assert!((g.0 - w.0).abs() < 1e-9 && (g.1 - w.1).abs() < 1e-9);
            assert_eq!(g.2, w.2);
        }
    }

    #[test]
    fn disjoint_intersection_is_empty() {
        let a = rect(0.0, 0.0, 1.0, 1.0, EdgeLabel::Free);
        let b = rect(5.0, 5.0, 6.0, 6.0, EdgeLabel::Free);
        let i = boolean_op(&a, &b, BoolOp::Intersection).unwrap();
        assert!(i.is_empty());
        assert_eq!(i.total_area(), 0.0);
    }

    #[test]
    fn free_over_obstacle_edge_becomes_obstacle() {
        // Map wall on x = 1 (obstacle); scan polygon shares that edge as free.
        let map = rect(0.0, 0.0, 1.0, 1.0, EdgeLabel::Obstacle);
        let scan = rect(0.0, 0.0, 1.0, 2.0, EdgeLabel::Free);
        let u = boolean_op(&map, &scan, BoolOp::Union).unwrap();
        assert!((u.total_area() - 2.0).abs() < 1e-12);
        for (s, l) in u.labeled_edges() {
            let on_map_wall = s.a.y <= 1.0 + 1e-12 && s.b.y <= 1.0 + 1e-12;
            let expect = if on_map_wall { EdgeLabel::Obstacle } else { EdgeLabel::Free };
            assert_eq!(l, expect, "edge {s:?}");
        }
    }

    #[test]
    fn split_obstacle_edge_keeps_label_on_both_halves() {
        let wall = rect(0.0, 0.0, 2.0, 1.0, EdgeLabel::Obstacle);
        let bump = rect(0.5, 0.5, 1.5, 2.0, EdgeLabel::Free);
        let u = boolean_op(&wall, &bump, BoolOp::Union).unwrap();
        let top_pieces: Vec<_> = u
            .labeled_edges()
            .filter(|(s, _)| (s.a.y - 1.0).abs() < 1e-12 && (s.b.y - 1.0).abs() < 1e-12)
            .collect();
        assert_eq!(top_pieces.len(), 2);
        assert!(top_pieces.iter().all(|(_, l)| *l == EdgeLabel::Obstacle));
    }

    #[test]
    fn labels_match_independent_propagation() {
        let a = rect(0.0, 0.0, 1.0, 1.0, EdgeLabel::Obstacle);
        let b = rect(0.5, -0.5, 2.0, 1.0, EdgeLabel::Free);
        let sources: Vec<_> = a.labeled_edges().chain(b.labeled_edges()).collect();
        for op in [BoolOp::Union, BoolOp::Intersection, BoolOp::Difference] {
            let r = boolean_op(&a, &b, op).unwrap();
            let (segs, labels): (Vec<_>, Vec<_>) = r.labeled_edges().unzip();
            let oracle = propagate_labels(&segs, &sources);
            for (got, want) in labels.iter().zip(oracle) {
                assert_eq!(Some(*got), want);
            }
        }
    }

    #[test]
    fn propagate_labels_examples() {
        let s = Segment::new(p(0.0, 0.0), p(2.0, 0.0));
        let sources = [(s, EdgeLabel::Free), (Segment::new(p(1.0, 0.0), p(3.0, 0.0)), EdgeLabel::Obstacle)];
        let out = propagate_labels(
            &[
                Segment::new(p(0.0, 0.0), p(1.0, 0.0)),
                Segment::new(p(1.0, 0.0), p(2.0, 0.0)),
                Segment::new(p(5.0, 5.0), p(6.0, 5.0)),
            ],
            &sources,
        );
        assert_eq!(out, vec![Some(EdgeLabel::Free), Some(EdgeLabel::Obstacle), None]);
    }

    #[test]
    fn ring_with_hole_from_difference() {
        let a = rect(0.0, 0.0, 3.0, 3.0, EdgeLabel::Free);
        let b = rect(1.0, 1.0, 2.0, 2.0, EdgeLabel::Obstacle);
        let d = boolean_op(&a, &b, BoolOp::Difference).unwrap();
        assert_eq!(d.polygons().len(), 1);
        assert_eq!(d.polygons()[0].holes.len(), 1);
        assert!(d.polygons()[0].outer.ring().is_ccw());
        assert!(!d.polygons()[0].holes[0].ring().is_ccw());
        assert!((d.total_area() - 8.0).abs() < 1e-12);
        assert!(d.polygons()[0].holes[0].labels().iter().all(|l| *l == EdgeLabel::Obstacle));
    }

    #[test]
    fn snap_examples() {
        let r = Ring::new(vec![p(1.0000003, 2.0), p(3.0, 2.0), p(3.0, 4.0)]).unwrap();
        let m = PolygonMap::single(LabeledPolygon::new(LabeledRing::uniform(r, EdgeLabel::Free), vec![]));
        let s = snap_vertices(&m, 1e-5);
        assert_eq!(s.polygons()[0].outer.ring().vertices()[0], p(1.0, 2.0));
        assert_eq!(snap_vertices(&s, 1e-5), s);

        let sliver = Ring::from_vertices_unchecked(vec![p(0.0, 0.0), p(1.0, 0.0), p(0.5, 2e-14)]);
        let m = PolygonMap::new(vec![LabeledPolygon {
            outer: LabeledRing::uniform(sliver, EdgeLabel::Free),
            holes: vec![],
        }]);
        assert!(snap_vertices(&m, 1e-9).is_empty());
    }

    fn unchecked(pts: Vec<Point2>, label: EdgeLabel) -> PolygonMap {
        let outer = LabeledRing::uniform(Ring::from_vertices_unchecked(pts), label);
        PolygonMap::new(vec![LabeledPolygon { outer, holes: vec![] }])
    }

    #[test]
    fn snap_splits_near_pinch() {
        // Two unit squares whose corners come within 2e-7 of each other.
        let pinched = vec![
            p(0.0, 0.0),
            p(1.0, 0.0),
            p(1.0, 1.0),
            p(1.0000002, 1.0),
            p(2.0, 1.0),
            p(2.0, 2.0),
            p(1.0, 2.0),
            p(1.0, 1.0000001),
            p(0.0, 1.0),
        ];
        assert!(!Ring::from_vertices_unchecked(pinched.clone()).is_simple());
        let s = snap_vertices(&unchecked(pinched, EdgeLabel::Obstacle), 1e-9);
        assert_eq!(s.polygons().len(), 2);
        assert!(s.rings().all(|r| r.ring().is_simple() && r.labels().len() == r.ring().len()));
        assert!((s.total_area() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn snap_drops_folded_spike() {
        let spiked = vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 0.5), p(1.5, 0.5), p(1.0, 0.5000001), p(1.0, 1.0), p(0.0, 1.0)];
        let s = snap_vertices(&unchecked(spiked, EdgeLabel::Free), 1e-9);
        assert_eq!(s.polygons().len(), 1);
        let outer = s.polygons()[0].outer.ring();
        assert!(outer.is_simple());
        assert_eq!(outer.len(), 5);
        assert!((s.total_area() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn reversed_ring_keeps_labels_on_edges() {
        let r = Ring::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)]).unwrap();
        let labels = vec![EdgeLabel::Obstacle, EdgeLabel::Free, EdgeLabel::Free, EdgeLabel::Free];
        let lr = LabeledRing::new(r, labels).unwrap().reversed();
        let obstacle: Vec<_> = lr.labeled_edges().filter(|(_, l)| *l == EdgeLabel::Obstacle).collect();
        assert_eq!(obstacle.len(), 1);
        assert!((obstacle[0].0.midpoint().y).abs() < 1e-15);
    }

    #[test]
    fn dump_roundtrip() {
        let d = boolean_op(
            &rect(0.0, 0.0, 3.0, 3.0, EdgeLabel::Free),
            &rect(1.0, 1.0, 2.0, 2.0, EdgeLabel::Obstacle),
            BoolOp::Difference,
        )
        .unwrap();
        let dump = MapDump::from(&d);
        let back = PolygonMap::try_from(dump.clone()).unwrap();
        assert_eq!(MapDump::from(&back), dump);
    }
}
