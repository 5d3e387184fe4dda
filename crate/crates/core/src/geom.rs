//! Planar primitives shared by every other module: points, poses, rings,
//! orientation and containment predicates, segment intersection and
//! Douglas–Peucker polyline reduction.
//!
//! All predicates here work in `f64` with the two global tolerances
//! [`EPS_PT`] and [`EPS_AREA`]. The clipping engine has its own exact
//! integer kernel and only uses these types at its boundary.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Distance tolerance in meters.
pub const EPS_PT: f64 = 1e-6;
/// Area (cross product) tolerance in square meters.
pub const EPS_AREA: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("ring has {0} vertices, at least 3 required")]
    TooFewVertices(usize),
    #[error("ring vertex {0} is not finite")]
    NonFinite(usize),
    #[error("ring vertices {0} and {1} coincide")]
    RepeatedVertex(usize, usize),
    #[error("ring has zero signed area")]
    ZeroArea,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Point2 { x, y }
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn from_polar(r: f64, angle: f64) -> Self {
        Point2::new(r * angle.cos(), r * angle.sin())
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y).sqrt()
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Unit vector, or zero for a zero vector.
    pub fn normalized(self) -> Point2 {
        let n = self.norm();
        if n > 0.0 {
            self * (1.0 / n)
        } else {
            Point2::default()
        }
    }

    /// Rotated by +90°.
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    pub fn lerp(self, o: Point2, t: f64) -> Point2 {
        self + (o - self) * t
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

/// Wraps an angle into (-π, π].
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// A rigid-body increment expressed in the frame of the pose it is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PoseDelta {
    pub dx: f64,
    pub dy: f64,
    pub dtheta: f64,
}

impl PoseDelta {
    pub const ZERO: PoseDelta = PoseDelta { dx: 0.0, dy: 0.0, dtheta: 0.0 };

    pub fn new(dx: f64, dy: f64, dtheta: f64) -> Self {
        PoseDelta { dx, dy, dtheta }
    }

    pub fn distance(&self) -> f64 {
        self.dx.hypot(self.dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    /// Radians in (-π, π].
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose2 { x, y, theta: normalize_angle(theta) }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    /// Applies `d` in this pose's frame: translate, then rotate.
    pub fn compose(&self, d: PoseDelta) -> Pose2 {
        let (s, c) = self.theta.sin_cos();
        Pose2::new(
            self.x + c * d.dx - s * d.dy,
            self.y + s * d.dx + c * d.dy,
            self.theta + d.dtheta,
        )
    }

    /// The increment that takes `self` to `other`, in `self`'s frame.
    pub fn delta_to(&self, other: &Pose2) -> PoseDelta {
        let (s, c) = self.theta.sin_cos();
        let wx = other.x - self.x;
        let wy = other.y - self.y;
        PoseDelta {
            dx: c * wx + s * wy,
            dy: -s * wx + c * wy,
            dtheta: normalize_angle(other.theta - self.theta),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }
}

/// A closed polygon boundary; the edge `i` runs from vertex `i` to `i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point2>", into = "Vec<Point2>")]
pub struct Ring {
    vertices: Vec<Point2>,
}

impl TryFrom<Vec<Point2>> for Ring {
    type Error = GeomError;
    fn try_from(v: Vec<Point2>) -> Result<Self, GeomError> {
        Ring::new(v)
    }
}

impl From<Ring> for Vec<Point2> {
    fn from(r: Ring) -> Self {
        r.vertices
    }
}

impl Ring {
    /// Checks vertex count, finiteness, distinct consecutive vertices and
    /// non-zero area. Simplicity is checked separately by [`Ring::is_simple`]
    /// since it is quadratic.
    pub fn new(vertices: Vec<Point2>) -> Result<Ring, GeomError> {
        let n = vertices.len();
        if n < 3 {
            return Err(GeomError::TooFewVertices(n));
        }
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(GeomError::NonFinite(i));
        }
        for i in 0..n {
            let j = (i + 1) % n;
            if vertices[i].dist(vertices[j]) <= EPS_PT {
                return Err(GeomError::RepeatedVertex(i, j));
            }
        }
        let ring = Ring { vertices };
        if ring.signed_area().abs() <= EPS_AREA {
            return Err(GeomError::ZeroArea);
        }
        Ok(ring)
    }

    pub(crate) fn from_vertices_unchecked(vertices: Vec<Point2>) -> Ring {
        Ring { vertices }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge(&self, i: usize) -> Segment {
        let n = self.vertices.len();
        Segment::new(self.vertices[i], self.vertices[(i + 1) % n])
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment> + '_ {
        (0..self.vertices.len()).map(move |i| self.edge(i))
    }

    pub fn signed_area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn is_ccw(&self) -> bool {
        self.signed_area() > 0.0
    }

    pub fn reversed(&self) -> Ring {
        let mut v = self.vertices.clone();
        v.reverse();
        Ring { vertices: v }
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|e| e.length()).sum()
    }

    /// No two non-adjacent edges touch and adjacent edges meet only at
    /// their shared vertex.
    pub fn is_simple(&self) -> bool {
        self.first_self_intersection().is_none()
    }

    /// Indices of the first pair of edges that violate simplicity.
    pub fn first_self_intersection(&self) -> Option<(usize, usize)> {
        self.self_contacts().into_iter().next().map(|(i, j, _)| (i, j))
    }

    /// Every pair `i < j` of edges that touch where simplicity forbids it,
    /// with a contact point, in lexicographic order. Sweeps edges by `x`.
    pub fn self_contacts(&self) -> Vec<(usize, usize, Point2)> {
        let n = self.vertices.len();
        let mut order: Vec<usize> = (0..n).collect();
        let lo = |i: usize| self.vertices[i].x.min(self.vertices[(i + 1) % n].x);
        let hi = |i: usize| self.vertices[i].x.max(self.vertices[(i + 1) % n].x);
        order.sort_by(|&a, &b| lo(a).total_cmp(&lo(b)).then(a.cmp(&b)));
        let mut out = Vec::new();
        for (k, &a) in order.iter().enumerate() {
            let reach = hi(a) + EPS_PT;
            for &b in order[k + 1..].iter().take_while(|&&b| lo(b) <= reach) {
                let (i, j) = (a.min(b), a.max(b));
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let contact = match segment_intersect(self.edge(i), self.edge(j)) {
                    SegmentIntersection::None => None,
                    SegmentIntersection::Touch(p) if adjacent => {
                        let shared = if j == i + 1 { self.vertices[j] } else { self.vertices[0] };
                        (p.dist(shared) > EPS_PT).then_some(p)
                    }
                    SegmentIntersection::Proper(p) | SegmentIntersection::Touch(p) => Some(p),
                    SegmentIntersection::OverlapCollinear(p, q) => Some(if adjacent {
                        // Keep the point away from the shared vertex.
                        let shared = if j == i + 1 { self.vertices[j] } else { self.vertices[0] };
                        if p.dist(shared) >= q.dist(shared) { p } else { q }
                    } else {
                        p
                    }),
                };
                if let Some(p) = contact {
                    out.push((i, j, p));
                }
            }
        }
        out.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        out
    }

    pub fn bbox(&self) -> (Point2, Point2) {
        bbox(&self.vertices)
    }
}

pub fn bbox(points: &[Point2]) -> (Point2, Point2) {
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

/// Shoelace area, positive for counter-clockwise vertex order.
pub fn signed_area(vertices: &[Point2]) -> f64 {
    let n = vertices.len();
    if n < 3 {
        return 0.0;
    }
    let o = vertices[0];
    let mut twice = 0.0;
    for i in 1..n - 1 {
        twice += (vertices[i] - o).cross(vertices[i + 1] - o);
    }
    0.5 * twice
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Left,
    Right,
    Collinear,
}

pub fn orient(p: Point2, q: Point2, r: Point2) -> Orientation {
    let c = (q - p).cross(r - p);
    if c.abs() <= EPS_AREA {
        Orientation::Collinear
    } else if c > 0.0 {
        Orientation::Left
    } else {
        Orientation::Right
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Inside,
    Outside,
    Boundary,
}

/// Even-odd classification of `p` against a set of rings.
pub fn point_in_region(p: Point2, rings: &[Ring]) -> Location {
    let mut inside = false;
    for ring in rings {
        let v = ring.vertices();
        let n = v.len();
        for i in 0..n {
            let a = v[i];
            let b = v[(i + 1) % n];
            if Segment::new(a, b).distance_to_point(p) <= EPS_PT {
                return Location::Boundary;
            }
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
    }
    if inside {
        Location::Inside
    } else {
        Location::Outside
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Point2,
    pub b: Point2,
}

impl Segment {
    pub const fn new(a: Point2, b: Point2) -> Self {
        Segment { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn midpoint(&self) -> Point2 {
        self.a.lerp(self.b, 0.5)
    }

    pub fn closest_point(&self, p: Point2) -> Point2 {
        let d = self.b - self.a;
        let l2 = d.dot(d);
        if l2 == 0.0 {
            return self.a;
        }
        let t = ((p - self.a).dot(d) / l2).clamp(0.0, 1.0);
        self.a + d * t
    }

    pub fn distance_to_point(&self, p: Point2) -> f64 {
        self.closest_point(p).dist(p)
    }

    pub fn distance_to_segment(&self, o: &Segment) -> f64 {
        if !matches!(segment_intersect(*self, *o), SegmentIntersection::None) {
            return 0.0;
        }
        self.distance_to_point(o.a)
            .min(self.distance_to_point(o.b))
            .min(o.distance_to_point(self.a))
            .min(o.distance_to_point(self.b))
    }

    fn bbox_overlaps(&self, o: &Segment, pad: f64) -> bool {
        self.a.x.min(self.b.x) <= o.a.x.max(o.b.x) + pad
            && o.a.x.min(o.b.x) <= self.a.x.max(self.b.x) + pad
            && self.a.y.min(self.b.y) <= o.a.y.max(o.b.y) + pad
            && o.a.y.min(o.b.y) <= self.a.y.max(self.b.y) + pad
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentIntersection {
    /// Interiors cross at a single point.
    Proper(Point2),
    /// A single shared point that is an endpoint of at least one segment.
    Touch(Point2),
    /// Collinear with a shared sub-segment of positive length.
    OverlapCollinear(Point2, Point2),
    None,
}

pub fn segment_intersect(s: Segment, t: Segment) -> SegmentIntersection {
    use SegmentIntersection as I;
    if !s.bbox_overlaps(&t, EPS_PT) {
        return I::None;
    }
    let r = s.b - s.a;
    let q = t.b - t.a;
    let lr = r.norm();
    let lq = q.norm();
    if lr <= EPS_PT || lq <= EPS_PT {
        // Point-like segment.
        let (pt, other) = if lr <= EPS_PT { (s.a, t) } else { (t.a, s) };
        return if other.distance_to_point(pt) <= EPS_PT { I::Touch(pt) } else { I::None };
    }
    let w = t.a - s.a;
    let denom = r.cross(q);
    // Perpendicular offset of t.a from the line of s, and the sine of the angle between them.
    if (denom / (lr * lq)).abs() <= EPS_PT / lr.max(lq).max(1.0) {
        if (w.cross(r) / lr).abs() > EPS_PT {
            return I::None;
        }
        let t0 = w.dot(r) / (lr * lr);
        let t1 = t0 + q.dot(r) / (lr * lr);
        let lo = t0.min(t1).max(0.0);
        let hi = t0.max(t1).min(1.0);
        let tol = EPS_PT / lr;
        if hi < lo - tol {
            return I::None;
        }
        if (hi - lo) * lr <= EPS_PT {
            return I::Touch(s.a + r * (0.5 * (lo + hi)).clamp(0.0, 1.0));
        }
        return I::OverlapCollinear(s.a + r * lo, s.a + r * hi);
    }
    let ts = w.cross(q) / denom;
    let tt = w.cross(r) / denom;
    let es = EPS_PT / lr;
    let et = EPS_PT / lq;
    if ts < -es || ts > 1.0 + es || tt < -et || tt > 1.0 + et {
        return I::None;
    }
    let p = s.a + r * ts.clamp(0.0, 1.0);
    let at_end = |u: f64, e: f64| u <= e || u >= 1.0 - e;
    if at_end(ts, es) || at_end(tt, et) {
        I::Touch(p)
    } else {
        I::Proper(p)
    }
}

/// Douglas–Peucker reduction. Endpoints are kept; an interior point is kept
/// only when it lies strictly farther than `tol` from the chord of the
/// current span.
pub fn simplify_polyline(points: &[Point2], tol: f64) -> Vec<Point2> {
    let n = points.len();
    if n <= 2 {
        return points.to_vec();
    }
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[n - 1] = true;
    let mut stack = vec![(0usize, n - 1)];
    while let Some((lo, hi)) = stack.pop() {
        if hi <= lo + 1 {
            continue;
        }
        let chord = Segment::new(points[lo], points[hi]);
        let mut best = (lo, -1.0);
        for (i, p) in points.iter().enumerate().take(hi).skip(lo + 1) {
            let d = chord.distance_to_point(*p);
            if d > best.1 {
                best = (i, d);
            }
        }
        if best.1 > tol {
            keep[best.0] = true;
            stack.push((lo, best.0));
            stack.push((best.0, hi));
        }
    }
    points.iter().zip(keep).filter_map(|(p, k)| k.then_some(*p)).collect()
}
