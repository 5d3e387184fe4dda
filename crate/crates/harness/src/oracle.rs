//! Rasterization oracle for boolean operations.

use std::path::Path;

use polyscout_core::clip::{boolean_op, BoolOp, EdgeLabel, LabeledPolygon, LabeledRing, PolygonMap};
use polyscout_core::geom::{Point2, Ring};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{read_json, HarnessError, SCHEMA_VERSION};

/// A polygon with holes as read by `oracle-clip`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolygonFile {
    pub schema: u32,
    pub outer: Vec<Point2>,
    #[serde(default)]
    pub holes: Vec<Vec<Point2>>,
}

impl PolygonFile {
    pub fn load(path: &Path) -> Result<PolygonFile, HarnessError> {
        let f: PolygonFile = read_json(path)?;
        if f.schema != SCHEMA_VERSION {
            return Err(HarnessError::Schema(f.schema));
        }
        Ok(f)
    }

    pub fn rings(&self) -> Result<Vec<Ring>, HarnessError> {
        let bad = |name: String, e: polyscout_core::geom::GeomError| HarnessError::Ring { ring: name, reason: e.to_string() };
        let mut out = vec![Ring::new(self.outer.clone()).map_err(|e| bad("outer".into(), e))?];
        for (i, h) in self.holes.iter().enumerate() {
            out.push(Ring::new(h.clone()).map_err(|e| bad(format!("hole {i}"), e))?);
        }
        for (i, r) in out.iter().enumerate() {
            if !r.is_simple() {
                let name = if i == 0 { "outer".to_string() } else { format!("hole {}", i - 1) };
                return Err(HarnessError::Ring { ring: name, reason: "ring self-intersects".into() });
            }
        }
        Ok(out)
    }
}

pub fn to_map(rings: &[Ring]) -> PolygonMap {
    let outer = LabeledRing::uniform(rings[0].clone(), EdgeLabel::Obstacle);
    let holes = rings[1..].iter().map(|r| LabeledRing::uniform(r.clone(), EdgeLabel::Obstacle)).collect();
    PolygonMap::single(LabeledPolygon::new(outer, holes))
}

/// Even-odd crossing test over all rings; boundary points have measure
/// zero, so no tolerance is needed.
fn covered(q: Point2, rings: &[Ring]) -> bool {
    let mut inside = false;
    for r in rings {
        let v = r.vertices();
        let mut j = v.len() - 1;
        for i in 0..v.len() {
            let (a, b) = (v[i], v[j]);
            if (a.y > q.y) != (b.y > q.y) && q.x < a.x + (q.y - a.y) * (b.x - a.x) / (b.y - a.y) {
                inside = !inside;
            }
            j = i;
        }
    }
    inside
}

fn ring_box(rings: &[Ring]) -> (Point2, Point2) {
    let pts: Vec<Point2> = rings.iter().flat_map(|r| r.vertices().iter().copied()).collect();
    polyscout_core::geom::bbox(&pts)
}

/// Area of `op(A, B)` estimated on a jittered `n × n` raster over the
/// smallest box that must contain the result.
pub fn raster_area(a: &[Ring], b: &[Ring], op: BoolOp, n: usize, seed: u64) -> f64 {
    let (alo, ahi) = ring_box(a);
    let (blo, bhi) = ring_box(b);
    let (lo, hi) = match op {
        BoolOp::Union => {
            (Point2::new(alo.x.min(blo.x), alo.y.min(blo.y)), Point2::new(ahi.x.max(bhi.x), ahi.y.max(bhi.y)))
        }
        BoolOp::Intersection => {
            (Point2::new(alo.x.max(blo.x), alo.y.max(blo.y)), Point2::new(ahi.x.min(bhi.x), ahi.y.min(bhi.y)))
        }
        BoolOp::Difference => (alo, ahi),
    };
    let (w, h) = (hi.x - lo.x, hi.y - lo.y);
    if w <= 0.0 || h <= 0.0 {
        return 0.0;
    }
    let keep = |q: Point2| match op {
        BoolOp::Union => covered(q, a) || covered(q, b),
        BoolOp::Intersection => covered(q, a) && covered(q, b),
        BoolOp::Difference => covered(q, a) && !covered(q, b),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut count = 0u64;
    for i in 0..n {
        for j in 0..n {
            let u = (i as f64 + rng.random::<f64>()) / n as f64;
            let v = (j as f64 + rng.random::<f64>()) / n as f64;
            count += u64::from(keep(Point2::new(lo.x + u * w, lo.y + v * h)));
        }
    }
    count as f64 * w * h / (n * n) as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleReport {
    pub clip_area: f64,
    pub oracle_area: f64,
    pub samples: u64,
}

/// Side of the raster used by [`compare`].
pub const ORACLE_RASTER: usize = 1000;

/// Runs `op` on two polygons and the raster oracle on the same pair.
pub fn compare(a: &[Ring], b: &[Ring], op: BoolOp, seed: u64) -> Result<OracleReport, HarnessError> {
    let result = boolean_op(&to_map(a), &to_map(b), op)?;
    Ok(OracleReport {
        clip_area: result.total_area(),
        oracle_area: raster_area(a, b, op, ORACLE_RASTER, seed),
        samples: (ORACLE_RASTER * ORACLE_RASTER) as u64,
    })
}
