//! One-parameter grids over a scenario.

use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::Value;

use crate::output::{metrics_csv, run_scenario, write_atomic, write_outputs, RunOutput, METRICS_FILE};
use crate::{HarnessError, Scenario};

/// Seed of replicate `r`; replicate 0 keeps the scenario seed so a
/// single-replicate sweep matches `run`.
pub fn replicate_seed(seed: u64, r: u64) -> u64 {
    if r == 0 {
        return seed;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r);
    rng.next_u64()
}

fn value_label(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Runs every `(value, replicate)` pair. Runs with the same replicate index
/// share a seed, so rows for different values are paired.
pub fn run_sweep(
    scenario: &Scenario,
    param: &str,
    values: &[Value],
    replicates: u64,
    seed: Option<u64>,
) -> Result<Vec<RunOutput>, HarnessError> {
    let base = seed.unwrap_or(scenario.seed);
    let jobs: Vec<(usize, u64)> = (0..values.len()).flat_map(|v| (0..replicates).map(move |r| (v, r))).collect();
    jobs.par_iter()
        .map(|&(v, r)| {
            let mut s = scenario.clone();
            s.overrides.insert(param.to_string(), values[v].clone());
            s.name = format!("{}[{}={}]", scenario.name, param, value_label(&values[v]));
            run_scenario(&s, Some(replicate_seed(base, r)))
        })
        .collect()
}

/// Writes each run into its own subdirectory plus one combined metrics file.
pub fn write_sweep(dir: &Path, runs: &[RunOutput]) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io { path: dir.to_path_buf(), source })?;
    for (i, run) in runs.iter().enumerate() {
        write_outputs(&dir.join(format!("run_{i:03}")), run)?;
    }
    let rows: Vec<_> = runs.iter().map(|r| r.metrics.clone()).collect();
    write_atomic(&dir.join(METRICS_FILE), metrics_csv(&rows)?.as_bytes())
}
