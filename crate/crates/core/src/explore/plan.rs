//! Shortest paths through known free space.
//!
//! The map boundary (every edge, whatever its label) is the obstacle set.
//! Nodes of the visibility graph are the reflex boundary vertices pushed out
//! along their bisector far enough to keep `clearance` from both incident
//! edges. A segment is traversable when it crosses no boundary edge and
//! keeps `clearance` from all of them. Search is A* that checks visibility
//! lazily, only for edges that would improve a node's cost.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use thiserror::Error;

use crate::clip::PolygonMap;
use crate::geom::{segment_intersect, Location, Point2, Segment, SegmentIntersection};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("start point ({0:.3}, {1:.3}) lies outside the known map")]
    StartOutsideMap(f64, f64),
}

struct EdgeIndex {
    lo: Point2,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
}

impl EdgeIndex {
    fn new(edges: &[Segment]) -> EdgeIndex {
        let (mut lo, mut hi) = (Point2::new(f64::MAX, f64::MAX), Point2::new(f64::MIN, f64::MIN));
        for e in edges {
            for p in [e.a, e.b] {
                lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
                hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
            }
        }
        if edges.is_empty() {
            lo = Point2::new(0.0, 0.0);
            hi = Point2::new(1.0, 1.0);
        }
        let extent = (hi.x - lo.x).max(hi.y - lo.y);
        let cell = (extent / 64.0).max(0.25);
        let nx = ((hi.x - lo.x) / cell) as usize + 1;
        let ny = ((hi.y - lo.y) / cell) as usize + 1;
        let mut idx = EdgeIndex { lo, cell, nx, ny, cells: vec![Vec::new(); nx * ny] };
        for (i, e) in edges.iter().enumerate() {
            let (x0, y0, x1, y1) = idx.cell_range(e.a, e.b, 0.0);
            for cy in y0..=y1 {
                for cx in x0..=x1 {
                    idx.cells[cy * nx + cx].push(i as u32);
                }
            }
        }
        idx
    }

    fn clamp_cell(&self, v: f64, n: usize) -> usize {
        (v / self.cell).floor().clamp(0.0, (n - 1) as f64) as usize
    }

    fn cell_range(&self, a: Point2, b: Point2, pad: f64) -> (usize, usize, usize, usize) {
        let x0 = self.clamp_cell(a.x.min(b.x) - pad - self.lo.x, self.nx);
        let x1 = self.clamp_cell(a.x.max(b.x) + pad - self.lo.x, self.nx);
        let y0 = self.clamp_cell(a.y.min(b.y) - pad - self.lo.y, self.ny);
        let y1 = self.clamp_cell(a.y.max(b.y) + pad - self.lo.y, self.ny);
        (x0, y0, x1, y1)
    }

    /// Edge ids in cells that may lie within `pad` of segment `ab`.
    fn near(&self, a: Point2, b: Point2, pad: f64, out: &mut Vec<u32>) {
        out.clear();
        let (x0, y0, x1, y1) = self.cell_range(a, b, pad);
        let seg = Segment::new(a, b);
        let reach = pad + self.cell * std::f64::consts::FRAC_1_SQRT_2;
        for cy in y0..=y1 {
            for cx in x0..=x1 {
                let c = Point2::new(
                    self.lo.x + (cx as f64 + 0.5) * self.cell,
                    self.lo.y + (cy as f64 + 0.5) * self.cell,
                );
                if seg.distance_to_point(c) <= reach {
                    out.extend_from_slice(&self.cells[cy * self.nx + cx]);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
    }
}

/// Visibility-graph planner over one map snapshot.
pub struct Planner<'a> {
    map: &'a PolygonMap,
    edges: Vec<Segment>,
    index: EdgeIndex,
    clearance: f64,
    nodes: Vec<Point2>,
}

impl<'a> Planner<'a> {
    pub fn new(map: &'a PolygonMap, clearance: f64) -> Planner<'a> {
        let edges: Vec<Segment> = map.rings().flat_map(|r| r.ring().edges()).collect();
        let index = EdgeIndex::new(&edges);
        let mut p = Planner { map, edges, index, clearance, nodes: Vec::new() };
        p.nodes = p.reflex_nodes();
        p
    }

    pub fn nodes(&self) -> &[Point2] {
        &self.nodes
    }

    fn reflex_nodes(&self) -> Vec<Point2> {
        let c = self.clearance;
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for ring in self.map.rings() {
            let v = ring.ring().vertices();
            let n = v.len();
            for i in 0..n {
                let (u, p, w) = (v[(i + n - 1) % n], v[i], v[(i + 1) % n]);
                let (d1, d2) = (p - u, w - p);
                // Interior is on the left of every ring, so a right turn is reflex.
                if d1.cross(d2) >= 0.0 || d1.norm() == 0.0 || d2.norm() == 0.0 {
                    continue;
                }
                let n1 = Point2::new(-d1.y, d1.x).normalized();
                let n2 = Point2::new(-d2.y, d2.x).normalized();
                let bis = n1 + n2;
                let len2 = bis.dot(bis);
                if len2 < 1e-6 {
                    continue;
                }
                let dist = (2.0 * c / len2.sqrt()).min(4.0 * c) * 1.02;
                let q = p + bis * (dist / len2.sqrt());
                let key = ((q.x / 0.05).round() as i64, (q.y / 0.05).round() as i64);
                if seen.insert(key) && self.point_clear(q, c) {
                    out.push(q);
                }
            }
        }
        out
    }

    /// Distance from `p` to the nearest boundary edge, capped at `cap`.
    pub fn boundary_distance(&self, p: Point2, cap: f64) -> f64 {
        let mut buf = Vec::new();
        self.index.near(p, p, cap, &mut buf);
        buf.iter().map(|&i| self.edges[i as usize].distance_to_point(p)).fold(cap, f64::min)
    }

    pub fn point_clear(&self, p: Point2, c: f64) -> bool {
        self.boundary_distance(p, c) >= c && self.inside(p)
    }

    /// Even-odd test against the edges indexed in `p`'s row of cells.
    fn inside(&self, p: Point2) -> bool {
        let idx = &self.index;
        let far = Point2::new(idx.lo.x + idx.cell * idx.nx as f64 + 1.0, p.y);
        let mut buf = Vec::new();
        idx.near(p, far, 0.0, &mut buf);
        let mut odd = false;
        for &i in &buf {
            let e = self.edges[i as usize];
            if (e.a.y > p.y) != (e.b.y > p.y) {
                let x = e.a.x + (p.y - e.a.y) / (e.b.y - e.a.y) * (e.b.x - e.a.x);
                if x > p.x {
                    odd = !odd;
                }
            }
        }
        odd
    }

    /// Whether the robot can travel `a → b` keeping `c` from the boundary.
    /// With `from_start`, edges already closer than `c` to `a` only need to
    /// be left without crossing them.
    fn segment_clear(&self, a: Point2, b: Point2, c: f64, from_start: bool, buf: &mut Vec<u32>) -> bool {
        self.index.near(a, b, c, buf);
        let s = Segment::new(a, b);
        for &i in buf.iter() {
            let e = self.edges[i as usize];
            match segment_intersect(s, e) {
                SegmentIntersection::None => {}
                SegmentIntersection::Touch(p) if from_start && p.dist(a) < 1e-9 => {}
                _ => return false,
            }
            let exempt = from_start && e.distance_to_point(a) < c;
            if !exempt && s.distance_to_segment(&e) < c {
                return false;
            }
        }
        !from_start || self.inside(s.midpoint())
    }

    /// Shortest traversable polyline from `start` to `goal`, both included.
    pub fn shortest_path(&self, start: Point2, goal: Point2) -> Result<Option<Vec<Point2>>, PlanError> {
        if self.map.locate(start) == Location::Outside {
            return Err(PlanError::StartOutsideMap(start.x, start.y));
        }
        let c = self.clearance;
        let mut buf = Vec::new();
        if self.segment_clear(start, goal, c, true, &mut buf) {
            return Ok(Some(vec![start, goal]));
        }
        let mut pts = vec![start, goal];
        pts.extend(self.nodes.iter().copied().filter(|q| q.dist(start) > 1e-9 && q.dist(goal) > 1e-9));
        let n = pts.len();
        let mut g = vec![f64::INFINITY; n];
        let mut parent = vec![usize::MAX; n];
        let mut closed = vec![false; n];
        let mut heap = BinaryHeap::new();
        g[0] = 0.0;
        heap.push(Reverse((pts[0].dist(goal).to_bits(), 0usize)));
        while let Some(Reverse((_, u))) = heap.pop() {
            if closed[u] {
                continue;
            }
            closed[u] = true;
            if u == 1 {
                let mut path = vec![pts[1]];
                let mut k = 1;
                while k != 0 {
                    k = parent[k];
                    path.push(pts[k]);
                }
                path.reverse();
                return Ok(Some(path));
            }
            for w in 1..n {
                if closed[w] {
                    continue;
                }
                let ng = g[u] + pts[u].dist(pts[w]);
                if ng >= g[w] {
                    continue;
                }
                let ok = self.segment_clear(pts[u], pts[w], c, u == 0, &mut buf);
                if ok {
                    g[w] = ng;
                    parent[w] = u;
                    heap.push(Reverse(((ng + pts[w].dist(goal)).to_bits(), w)));
                }
            }
        }
        Ok(None)
    }

    /// First point near `goal` (within `tol`) that keeps clearance, nearest first.
    pub fn goal_point(&self, goal: Point2, tol: f64) -> Option<Point2> {
        let c = self.clearance;
        let mut cands = vec![goal];
        for r in [0.25 * tol, 0.5 * tol, 0.75 * tol, tol] {
            for k in 0..16 {
                cands.push(goal + Point2::from_polar(r, k as f64 * std::f64::consts::TAU / 16.0));
            }
        }
        if let Some(q) = cands.into_iter().find(|q| self.point_clear(*q, c)) {
            return Some(q);
        }
        // Clamp onto the nearest boundary point, then step inward.
        let mut buf = Vec::new();
        let reach = tol + c;
        self.index.near(goal, goal, reach, &mut buf);
        let nearest = buf
            .iter()
            .map(|&i| self.edges[i as usize])
            .min_by(|a, b| a.distance_to_point(goal).total_cmp(&b.distance_to_point(goal)))?;
        let foot = nearest.closest_point(goal);
        let d = nearest.b - nearest.a;
        let inward = Point2::new(-d.y, d.x).normalized();
        let q = foot + inward * (c * 1.05);
        (q.dist(goal) <= reach && self.point_clear(q, c)).then_some(q)
    }
}

/// Shortest clearance-respecting path from `start` to the nearest usable
/// point within `goal_tolerance` of `goal`.
pub fn plan_path(
    map: &PolygonMap,
    start: Point2,
    goal: Point2,
    clearance: f64,
    goal_tolerance: f64,
) -> Result<Option<Vec<Point2>>, PlanError> {
    if map.locate(start) == Location::Outside {
        return Err(PlanError::StartOutsideMap(start.x, start.y));
    }
    let planner = Planner::new(map, clearance);
    match planner.goal_point(goal, goal_tolerance) {
        Some(g) => planner.shortest_path(start, g),
        None => Ok(None),
    }
}

pub fn path_length(path: &[Point2]) -> f64 {
    path.windows(2).map(|w| w[0].dist(w[1])).sum()
}
