use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use polyscout::oracle::{compare, PolygonFile};
use polyscout::output::{run_scenario, write_outputs, MetricsRow};
use polyscout::scenario::parse_value;
use polyscout::sweep::{run_sweep, write_sweep};
use polyscout::world_file::load_world;
use polyscout::worlds::write_worlds;
use polyscout::{HarnessError, Scenario};
use polyscout_core::clip::BoolOp;

#[derive(Parser)]
#[command(name = "polyscout", version, about = "Polygonal-map exploration simulator")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = "./out")]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its trace, metrics and final map.
    Run { scenario: PathBuf },
    /// Run a scenario once per value of one config key.
    Sweep {
        scenario: PathBuf,
        /// Dotted config key, e.g. `sensor.illumination`.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Seeded repetitions per value.
        #[arg(long, default_value_t = 1)]
        replicates: u64,
    },
    /// Check a world file against the schema and geometry invariants.
    Validate { world: PathBuf },
    /// Compare a boolean operation against a rasterization estimate.
    OracleClip {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, value_enum, default_value_t = Op::Union)]
        op: Op,
    },
    /// Write the bundled world files.
    GenWorlds {
        #[arg(default_value = "scenarios/worlds")]
        dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Op {
    Union,
    Intersection,
    Difference,
}

impl From<Op> for BoolOp {
    fn from(op: Op) -> Self {
        match op {
            Op::Union => BoolOp::Union,
            Op::Intersection => BoolOp::Intersection,
            Op::Difference => BoolOp::Difference,
        }
    }
}

fn summary(m: &MetricsRow) -> String {
    let t90 = m.t90_s.map_or_else(|| "-".to_string(), |t| format!("{t:.1}s"));
    format!(
        "{} seed {}: coverage {:.3}, loc error {:.3} m, reject rate {:.3}, t90 {}, steps {}",
        m.scenario, m.seed, m.coverage, m.final_loc_error_m, m.reject_rate, t90, m.steps
    )
}

fn execute(cli: &Cli) -> Result<(), HarnessError> {
    match &cli.command {
        Command::Run { scenario } => {
            let s = Scenario::load(scenario)?;
            let run = run_scenario(&s, cli.seed)?;
            write_outputs(&cli.out, &run)?;
            if !cli.quiet {
                println!("{} ({:?})", summary(&run.metrics), run.exploration.outcome);
            }
        }
        Command::Sweep { scenario, param, values, replicates } => {
            let s = Scenario::load(scenario)?;
            let values: Vec<_> = values.iter().map(|v| parse_value(v)).collect();
            // Reject a bad key or value before spending time on runs.
            for v in &values {
                let mut probe = s.clone();
                probe.overrides.insert(param.clone(), v.clone());
                probe.config()?;
            }
            let runs = run_sweep(&s, param, &values, *replicates, cli.seed)?;
            write_sweep(&cli.out, &runs)?;
            if !cli.quiet {
                for r in &runs {
                    println!("{}", summary(&r.metrics));
                }
            }
        }
        Command::Validate { world } => {
            let w = load_world(world)?;
            if !cli.quiet {
                println!(
                    "{}: ok ({} obstacles, {} feature sites, free area {:.3} m²)",
                    world.display(),
                    w.obstacles.len(),
                    w.feature_sites.len(),
                    w.free_area()
                );
            }
        }
        Command::OracleClip { a, b, op } => {
            let ra = PolygonFile::load(a)?.rings()?;
            let rb = PolygonFile::load(b)?.rings()?;
            let rep = compare(&ra, &rb, (*op).into(), cli.seed.unwrap_or(0))?;
            println!("clip area:   {:.9}", rep.clip_area);
            println!("oracle area: {:.9} ({} samples)", rep.oracle_area, rep.samples);
            if !cli.quiet {
                let rel = (rep.clip_area - rep.oracle_area).abs() / rep.oracle_area.max(f64::MIN_POSITIVE);
                println!("relative difference: {rel:.2e}");
            }
        }
        Command::GenWorlds { dir } => {
            for p in write_worlds(dir)? {
                if !cli.quiet {
                    println!("wrote {}", p.display());
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 1 } else { 2 })
        }
    }
}
