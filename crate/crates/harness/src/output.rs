//! Running scenarios and writing their artifacts.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use polyscout_core::clip::{EdgeLabel, MapDump, PolygonMap};
use polyscout_core::explore::{compute_metrics, run_exploration, Exploration, Metrics, TraceRecord};
use polyscout_core::mapper::Frontier;
use polyscout_core::sensor::World;
use serde::Serialize;

use crate::{HarnessError, Scenario};

pub const TRACE_FILE: &str = "trace.jsonl";
pub const METRICS_FILE: &str = "metrics.csv";
pub const SVG_FILE: &str = "map_final.svg";
pub const MAP_FILE: &str = "map_final.json";

/// Pixels per meter in SVG snapshots.
pub const SVG_SCALE: f64 = 100.0;

const COLOR_WORLD: &str = "#b0b0b0";
const COLOR_OBSTACLE: &str = "#1f2933";
const COLOR_FREE: &str = "#3e8ed0";
const COLOR_FRONTIER: &str = "#e8590c";
const COLOR_TRUE_PATH: &str = "#2f9e44";
const COLOR_EST_PATH: &str = "#c92a2a";
const COLOR_MAP_FILL: &str = "#eef4fb";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub scenario: String,
    pub seed: u64,
    pub coverage: f64,
    pub final_loc_error_m: f64,
    pub reject_rate: f64,
    pub t90_s: Option<f64>,
    pub steps: u64,
}

impl MetricsRow {
    pub fn new(scenario: &str, seed: u64, m: &Metrics) -> Self {
        MetricsRow {
            scenario: scenario.to_string(),
            seed,
            coverage: m.coverage,
            final_loc_error_m: m.final_loc_error_m,
            reject_rate: m.reject_rate,
            t90_s: m.t90_s,
            steps: m.steps,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub name: String,
    pub seed: u64,
    pub world: World,
    pub exploration: Exploration,
    pub metrics: MetricsRow,
}

/// Runs `scenario`, with `seed` replacing the scenario's own when given.
pub fn run_scenario(scenario: &Scenario, seed: Option<u64>) -> Result<RunOutput, HarnessError> {
    let world = scenario.load_world()?;
    let cfg = scenario.config()?;
    let seed = seed.unwrap_or(scenario.seed);
    let exploration = run_exploration(&world, &cfg, seed)?;
    let metrics = MetricsRow::new(&scenario.name, seed, &compute_metrics(&exploration.trace, &world));
    Ok(RunOutput { name: scenario.name.clone(), seed, world, exploration, metrics })
}

pub fn trace_jsonl(trace: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in trace {
        out.push_str(&serde_json::to_string(r).expect("trace records always serialize"));
        out.push('\n');
    }
    out
}

pub fn metrics_csv(rows: &[MetricsRow]) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn map_json(map: &PolygonMap) -> String {
    let mut s = serde_json::to_string_pretty(&MapDump::from(map)).expect("map dumps always serialize");
    s.push('\n');
    s
}

/// Replaces `path` with `contents` in one rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), HarnessError> {
    let io = |source| HarnessError::Io { path: path.to_path_buf(), source };
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Writes the trace, the metrics row and both map snapshots into `dir`.
pub fn write_outputs(dir: &Path, run: &RunOutput) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io { path: dir.to_path_buf(), source })?;
    write_atomic(&dir.join(TRACE_FILE), trace_jsonl(&run.exploration.trace).as_bytes())?;
    write_atomic(&dir.join(METRICS_FILE), metrics_csv(std::slice::from_ref(&run.metrics))?.as_bytes())?;
    let svg = render_svg(&run.world, &run.exploration.map, &run.exploration.frontiers, &run.exploration.trace);
    write_atomic(&dir.join(SVG_FILE), svg.as_bytes())?;
    write_atomic(&dir.join(MAP_FILE), map_json(&run.exploration.map).as_bytes())?;
    Ok(())
}

struct Canvas {
    x0: f64,
    y1: f64,
}

impl Canvas {
    fn pt(&self, x: f64, y: f64) -> (f64, f64) {
        ((x - self.x0) * SVG_SCALE, (self.y1 - y) * SVG_SCALE)
    }

    fn points(&self, pts: impl Iterator<Item = (f64, f64)>) -> String {
        pts.map(|(x, y)| {
            let (u, v) = self.pt(x, y);
            format!("{u:.1},{v:.1}")
        })
        .collect::<Vec<_>>()
        .join(" ")
    }
}

/// Snapshot of the world, the final map, its frontiers and both trajectories.
pub fn render_svg(world: &World, map: &PolygonMap, frontiers: &[Frontier], trace: &[TraceRecord]) -> String {
    let margin = 0.5;
    let (lo, hi) = world.bounds.bbox();
    let c = Canvas { x0: lo.x - margin, y1: hi.y + margin };
    let w = (hi.x - lo.x + 2.0 * margin) * SVG_SCALE;
    let h = (hi.y - lo.y + 2.0 * margin) * SVG_SCALE;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    for poly in map.polygons() {
        let mut d = String::new();
        for ring in poly.rings() {
            let pts = c.points(ring.ring().vertices().iter().map(|p| (p.x, p.y)));
            let _ = write!(d, "M {pts} Z ");
        }
        let _ = writeln!(s, r#"<path d="{}" fill="{COLOR_MAP_FILL}" fill-rule="evenodd" stroke="none"/>"#, d.trim_end());
    }
    let rings = std::iter::once(&world.bounds).chain(world.obstacles.iter().map(|o| &o.ring));
    for r in rings {
        let pts = c.points(r.vertices().iter().map(|p| (p.x, p.y)));
        let _ = writeln!(s, r#"<polygon points="{pts}" fill="none" stroke="{COLOR_WORLD}" stroke-width="2"/>"#);
    }
    for (seg, label) in map.labeled_edges() {
        let color = if label == EdgeLabel::Obstacle { COLOR_OBSTACLE } else { COLOR_FREE };
        let (a, b) = (c.pt(seg.a.x, seg.a.y), c.pt(seg.b.x, seg.b.y));
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"/>"#,
            a.0, a.1, b.0, b.1
        );
    }
    for f in frontiers {
        let pts = c.points(f.chain.iter().map(|p| (p.x, p.y)));
        let _ = writeln!(s, r#"<polyline points="{pts}" fill="none" stroke="{COLOR_FRONTIER}" stroke-width="5"/>"#);
    }
    if !trace.is_empty() {
        let truth = c.points(trace.iter().map(|r| (r.true_pose.x, r.true_pose.y)));
        let est = c.points(trace.iter().map(|r| (r.est_pose.x, r.est_pose.y)));
        let _ = writeln!(s, r#"<polyline points="{truth}" fill="none" stroke="{COLOR_TRUE_PATH}" stroke-width="2"/>"#);
        let _ = writeln!(
            s,
            r#"<polyline points="{est}" fill="none" stroke="{COLOR_EST_PATH}" stroke-width="2" stroke-dasharray="6 4"/>"#
        );
    }
    s.push_str("</svg>\n");
    s
}
