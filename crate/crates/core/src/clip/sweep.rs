//! Integer scanbeam kernel.
//!
//! Coordinates are snapped to a 1 nm grid and every predicate below is
//! evaluated exactly in `i128`. The pipeline is:
//!
//! 1. subdivide: split edges at every crossing (rounded to the grid) and at
//!    every vertex lying on another edge's interior, repeated until the edge
//!    set is a planar arrangement with shared endpoints only;
//! 2. merge coincident edges, summing per-operand multiplicity and OR-ing the
//!    obstacle flag (Obstacle dominates Free);
//! 3. sweep scanbeams bottom to top with an active-edge table ordered by x;
//!    the running even-odd parity of each operand gives the fill on both
//!    sides of every edge, which decides whether it bounds the result;
//! 4. link the surviving directed edges into rings, interior on the left.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::BoolOp;

/// Meters per grid unit.
pub(crate) const GRID: f64 = 1e-9;
/// Largest admissible |coordinate| in grid units (about 1.1 km); keeps every
/// intermediate product inside `i128`.
pub(crate) const LIMIT: i64 = 1 << 40;
const MAX_ROUNDS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) struct IPt {
    pub x: i64,
    pub y: i64,
}

impl IPt {
    fn yx(self) -> (i64, i64) {
        (self.y, self.x)
    }
}

impl Ord for IPt {
    fn cmp(&self, o: &Self) -> Ordering {
        self.yx().cmp(&o.yx())
    }
}

impl PartialOrd for IPt {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

pub(crate) fn to_grid(v: f64) -> Option<i64> {
    let g = (v / GRID).round();
    (g.is_finite() && g.abs() <= LIMIT as f64).then_some(g as i64)
}

pub(crate) fn from_grid(v: i64) -> f64 {
    v as f64 * GRID
}

fn cross(o: IPt, a: IPt, b: IPt) -> i128 {
    let (ax, ay) = ((a.x - o.x) as i128, (a.y - o.y) as i128);
    let (bx, by) = ((b.x - o.x) as i128, (b.y - o.y) as i128);
    ax * by - ay * bx
}

fn dot(o: IPt, a: IPt, b: IPt) -> i128 {
    let (ax, ay) = ((a.x - o.x) as i128, (a.y - o.y) as i128);
    let (bx, by) = ((b.x - o.x) as i128, (b.y - o.y) as i128);
    ax * bx + ay * by
}

/// Input edge: operand index (0 subject, 1 clip) and obstacle flag.
#[derive(Debug, Clone, Copy)]
pub(crate) struct InEdge {
    pub a: IPt,
    pub b: IPt,
    pub operand: usize,
    pub obstacle: bool,
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    a: IPt,
    b: IPt,
    count: [u32; 2],
    obstacle: bool,
}

impl Edge {
    fn min_x(&self) -> i64 {
        self.a.x.min(self.b.x)
    }
    fn max_x(&self) -> i64 {
        self.a.x.max(self.b.x)
    }
    fn y_overlaps(&self, o: &Edge) -> bool {
        self.a.y.min(self.b.y) <= o.a.y.max(o.b.y) && o.a.y.min(o.b.y) <= self.a.y.max(self.b.y)
    }
}

/// A ring produced by the kernel, interior on the left of every edge.
#[derive(Debug, Clone)]
pub(crate) struct IRing {
    pub pts: Vec<IPt>,
    pub obstacle: Vec<bool>,
}

impl IRing {
    pub fn twice_area(&self) -> i128 {
        let o = self.pts[0];
        (1..self.pts.len() - 1).map(|i| cross(o, self.pts[i], self.pts[i + 1])).sum()
    }
}

pub(crate) fn run(input: Vec<InEdge>, op: BoolOp) -> Vec<IRing> {
    let edges: Vec<Edge> = input
        .into_iter()
        .filter(|e| e.a != e.b)
        .map(|e| {
            let mut count = [0; 2];
            count[e.operand] = 1;
            Edge { a: e.a, b: e.b, count, obstacle: e.obstacle }
        })
        .collect();
    let edges = merge(subdivide(edges));
    let directed = classify(&edges, op);
    link(directed)
}

fn strictly_inside(e: &Edge, q: IPt) -> bool {
    q != e.a && q != e.b && cross(e.a, e.b, q) == 0 && dot(e.a, e.b, q) > 0 && dot(e.b, e.a, q) > 0
}

fn round_div(n: i128, d: i128) -> i128 {
    let (n, d) = if d < 0 { (-n, -d) } else { (n, d) };
    (2 * n + d).div_euclid(2 * d)
}

fn crossing_point(e: &Edge, f: &Edge) -> IPt {
    let (ex, ey) = ((e.b.x - e.a.x) as i128, (e.b.y - e.a.y) as i128);
    let (fx, fy) = ((f.b.x - f.a.x) as i128, (f.b.y - f.a.y) as i128);
    let (wx, wy) = ((f.a.x - e.a.x) as i128, (f.a.y - e.a.y) as i128);
    let den = ex * fy - ey * fx;
    let num = wx * fy - wy * fx;
    IPt {
        x: e.a.x + round_div(num * ex, den) as i64,
        y: e.a.y + round_div(num * ey, den) as i64,
    }
}

fn find_cuts(e: &Edge, f: &Edge, ce: &mut Vec<IPt>, cf: &mut Vec<IPt>) {
    let o1 = cross(e.a, e.b, f.a).signum();
    let o2 = cross(e.a, e.b, f.b).signum();
    let o3 = cross(f.a, f.b, e.a).signum();
    let o4 = cross(f.a, f.b, e.b).signum();
    if o1 * o2 < 0 && o3 * o4 < 0 {
        let p = crossing_point(e, f);
        if p != e.a && p != e.b {
            ce.push(p);
        }
        if p != f.a && p != f.b {
            cf.push(p);
        }
        return;
    }
    for q in [f.a, f.b] {
        if strictly_inside(e, q) {
            ce.push(q);
        }
    }
    for q in [e.a, e.b] {
        if strictly_inside(f, q) {
            cf.push(q);
        }
    }
}

fn subdivide(mut edges: Vec<Edge>) -> Vec<Edge> {
    for _ in 0..MAX_ROUNDS {
        let n = edges.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| edges[i].min_x());
        let mut cuts: Vec<Vec<IPt>> = vec![Vec::new(); n];
        let mut any = false;
        for (k, &i) in order.iter().enumerate() {
            let max_x = edges[i].max_x();
            for &j in &order[k + 1..] {
                if edges[j].min_x() > max_x {
                    break;
                }
                if !edges[i].y_overlaps(&edges[j]) {
                    continue;
                }
                let (mut ci, mut cj) = (Vec::new(), Vec::new());
                find_cuts(&edges[i], &edges[j], &mut ci, &mut cj);
                if !ci.is_empty() || !cj.is_empty() {
                    any = true;
                    cuts[i].extend(ci);
                    cuts[j].extend(cj);
                }
            }
        }
        if !any {
            return edges;
        }
        let mut next = Vec::with_capacity(n + n / 2);
        for (e, mut c) in edges.into_iter().zip(cuts) {
            if c.is_empty() {
                next.push(e);
                continue;
            }
            c.sort_by_key(|&q| dot(e.a, e.b, q));
            c.dedup();
            let mut from = e.a;
            for q in c.into_iter().chain(std::iter::once(e.b)) {
                if q != from {
                    next.push(Edge { a: from, b: q, ..e });
                    from = q;
                }
            }
        }
        edges = next;
    }
    // Rounding kept producing new crossings; what remains is sub-nanometer
    // and the sweep still yields closed rings.
    edges
}

fn merge(edges: Vec<Edge>) -> Vec<Edge> {
    let mut acc: BTreeMap<(IPt, IPt), Edge> = BTreeMap::new();
    for e in edges {
        let (a, b) = if e.a < e.b { (e.a, e.b) } else { (e.b, e.a) };
        acc.entry((a, b))
            .and_modify(|m| {
                m.count[0] += e.count[0];
                m.count[1] += e.count[1];
                m.obstacle |= e.obstacle;
            })
            .or_insert(Edge { a, b, ..e });
    }
    acc.into_values().filter(|e| e.count[0] % 2 == 1 || e.count[1] % 2 == 1).collect()
}

/// Edge order inside a scanbeam both edges span. Edges are stored bottom
/// (`a`) to top (`b`) and never cross inside the beam.
fn beam_order(e: &Edge, f: &Edge) -> Ordering {
    // Reference point: the higher of the two bottoms, tested against the other edge.
    let (p, other, flip) = if e.a.y >= f.a.y { (e.a, f, false) } else { (f.a, e, true) };
    let mut side = cross(other.a, other.b, p).signum();
    if side == 0 {
        // Shared bottom vertex: decide at the lower of the two tops.
        let (q, other, flip2) = if e.b.y <= f.b.y { (e.b, f, false) } else { (f.b, e, true) };
        let s = cross(other.a, other.b, q).signum();
        let s = if flip2 { -s } else { s };
        return match s {
            1 => Ordering::Less,
            -1 => Ordering::Greater,
            _ => Ordering::Equal,
        };
    }
    if flip {
        side = -side;
    }
    // Left of an upward edge means smaller x.
    if side > 0 {
        Ordering::Less
    } else {
        Ordering::Greater
    }
}

fn fills(op: BoolOp, a: bool, b: bool) -> bool {
    match op {
        BoolOp::Union => a || b,
        BoolOp::Intersection => a && b,
        BoolOp::Difference => a && !b,
    }
}

#[derive(Debug, Clone, Copy)]
struct Directed {
    from: IPt,
    to: IPt,
    obstacle: bool,
}

fn classify(edges: &[Edge], op: BoolOp) -> Vec<Directed> {
    let mut ys: Vec<i64> = edges.iter().flat_map(|e| [e.a.y, e.b.y]).collect();
    ys.sort_unstable();
    ys.dedup();

    // After merge every edge has a < b in (y, x) order, so a is the bottom.
    let mut rising: Vec<usize> = (0..edges.len()).filter(|&i| edges[i].a.y != edges[i].b.y).collect();
    rising.sort_by_key(|&i| edges[i].a.y);
    let mut flat: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, e) in edges.iter().enumerate() {
        if e.a.y == e.b.y {
            flat.entry(e.a.y).or_default().push(i);
        }
    }

    let mut out = Vec::new();
    let mut emit = |e: &Edge, before: (bool, bool), forward: bool| {
        let after = (before.0 ^ (e.count[0] % 2 == 1), before.1 ^ (e.count[1] % 2 == 1));
        let lhs = fills(op, before.0, before.1);
        let rhs = fills(op, after.0, after.1);
        if lhs != rhs {
            // Result interior must end up on the left of the directed edge.
            let (from, to) = if lhs == forward { (e.a, e.b) } else { (e.b, e.a) };
            out.push(Directed { from, to, obstacle: e.obstacle });
        }
    };

    let mut active: Vec<usize> = Vec::new();
    let mut fresh = vec![false; edges.len()];
    let mut next = 0;
    for &y in &ys {
        active.retain(|&i| edges[i].b.y > y);
        while next < rising.len() && edges[rising[next]].a.y == y {
            let i = rising[next];
            let pos = active.partition_point(|&j| beam_order(&edges[j], &edges[i]) == Ordering::Less);
            active.insert(pos, i);
            fresh[i] = true;
            next += 1;
        }

        if let Some(hs) = flat.get(&y) {
            for &h in hs {
                let e = &edges[h];
                // Doubled coordinates so the midpoint stays integral.
                let mid = IPt { x: e.a.x + e.b.x, y: 2 * y };
                let mut above = (false, false);
                for &j in &active {
                    let f = &edges[j];
                    let a2 = IPt { x: 2 * f.a.x, y: 2 * f.a.y };
                    let b2 = IPt { x: 2 * f.b.x, y: 2 * f.b.y };
                    if cross(a2, b2, mid) < 0 {
                        above.0 ^= f.count[0] % 2 == 1;
                        above.1 ^= f.count[1] % 2 == 1;
                    }
                }
                // Going +x, the left side is the face above.
                emit(e, above, true);
            }
        }

        let mut parity = (false, false);
        for &i in &active {
            let e = &edges[i];
            if fresh[i] {
                fresh[i] = false;
                // Going upward, the left side is the face with smaller x.
                emit(e, parity, true);
            }
            parity.0 ^= e.count[0] % 2 == 1;
            parity.1 ^= e.count[1] % 2 == 1;
        }
    }
    out
}

/// Half-plane index and comparator for counter-clockwise angle from `r`.
fn ccw_key_less(r: (i128, i128), d1: (i128, i128), d2: (i128, i128)) -> bool {
    let half = |d: (i128, i128)| {
        let c = r.0 * d.1 - r.1 * d.0;
        let dt = r.0 * d.0 + r.1 * d.1;
        u8::from(!(c > 0 || (c == 0 && dt > 0)))
    };
    let (h1, h2) = (half(d1), half(d2));
    if h1 != h2 {
        return h1 < h2;
    }
    d1.0 * d2.1 - d1.1 * d2.0 > 0
}

fn link(edges: Vec<Directed>) -> Vec<IRing> {
    let mut outgoing: BTreeMap<IPt, Vec<usize>> = BTreeMap::new();
    for (i, e) in edges.iter().enumerate() {
        outgoing.entry(e.from).or_default().push(i);
    }
    let vec_of = |o: IPt, p: IPt| ((p.x - o.x) as i128, (p.y - o.y) as i128);
    let mut used = vec![false; edges.len()];
    let mut rings = Vec::new();
    for start in 0..edges.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let mut pts = vec![edges[start].from];
        let mut obstacle = vec![edges[start].obstacle];
        let mut cur = start;
        let closed = loop {
            let v = edges[cur].to;
            let back = vec_of(v, edges[cur].from);
            // Tightest clockwise turn from the reversed incoming edge keeps
            // touching rings apart.
            let best = outgoing
                .get(&v)
                .into_iter()
                .flatten()
                .copied()
                .filter(|&c| !used[c] || c == start)
                .reduce(|best, c| {
                    if ccw_key_less(back, vec_of(v, edges[best].to), vec_of(v, edges[c].to)) {
                        c
                    } else {
                        best
                    }
                });
            match best {
                Some(b) if b == start => break true,
                Some(b) => {
                    used[b] = true;
                    pts.push(v);
                    obstacle.push(edges[b].obstacle);
                    cur = b;
                }
                None => break false,
            }
        };
        debug_assert!(closed, "open chain in boolean result");
        if closed {
            let ring = drop_collinear(IRing { pts, obstacle });
            if ring.pts.len() >= 3 && ring.twice_area() != 0 {
                rings.push(ring);
            }
        }
    }
    rings
}

/// Removes vertices that sit on a straight continuation between two edges
/// carrying the same label.
fn drop_collinear(mut r: IRing) -> IRing {
    loop {
        let n = r.pts.len();
        if n < 3 {
            return r;
        }
        let mut removed = false;
        let mut i = 0;
        while i < r.pts.len() && r.pts.len() >= 3 {
            let n = r.pts.len();
            let prev = (i + n - 1) % n;
            let next = (i + 1) % n;
            let (a, v, b) = (r.pts[prev], r.pts[i], r.pts[next]);
            if r.obstacle[prev] == r.obstacle[i] && cross(a, v, b) == 0 && dot(v, a, b) < 0 {
                r.pts.remove(i);
                r.obstacle.remove(i);
                removed = true;
            } else {
                i += 1;
            }
        }
        if !removed {
            return r;
        }
    }
}

/// Exact even-odd location of a point given in doubled grid coordinates.
pub(crate) fn locate_doubled(ring: &[IPt], p: IPt) -> crate::geom::Location {
    use crate::geom::Location;
    let n = ring.len();
    let mut inside = false;
    for i in 0..n {
        let a = IPt { x: 2 * ring[i].x, y: 2 * ring[i].y };
        let b = IPt { x: 2 * ring[(i + 1) % n].x, y: 2 * ring[(i + 1) % n].y };
        let c = cross(a, b, p);
        if c == 0 && dot(p, a, b) <= 0 {
            return Location::Boundary;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let left = if b.y > a.y { c > 0 } else { c < 0 };
            if left {
                inside = !inside;
            }
        }
    }
    if inside {
        Location::Inside
    } else {
        Location::Outside
    }
}
