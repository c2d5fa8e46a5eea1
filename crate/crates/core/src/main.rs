use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use relkm::pipeline::{run, Mode, RunConfig};
use relkm::Error;

/// k-means over the join of an acyclic relational schema.
#[derive(Debug, Parser)]
#[command(name = "relkm", version)]
struct Args {
    /// Schema file: one `name: col1,col2 @ file.csv` line per table.
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Ball-count slack; defaults to epsilon / 2.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 30)]
    tau: u32,
    /// Sample c · k · ⌈lg N⌉ centers before weighing.
    #[arg(long, default_value_t = 3.0)]
    coreset_factor: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::Cluster)]
    mode: Mode,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Largest join the baseline and verify modes will materialize.
    #[arg(long, default_value_t = relkm::oracle::DEFAULT_GUARD)]
    guard: u64,
    /// Test points per ring; 0 removes the cap.
    #[arg(long, default_value_t = 1000)]
    sample_cap: u64,
    /// Include wall-clock stage timings in the report.
    #[arg(long)]
    timings: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let cfg = RunConfig {
        schema: args.schema,
        k: args.k,
        epsilon: args.epsilon,
        delta: args.delta,
        tau: args.tau,
        coreset_factor: args.coreset_factor,
        seed: args.seed,
        mode: args.mode,
        guard: args.guard,
        sample_cap: (args.sample_cap > 0).then_some(args.sample_cap),
        timings: args.timings,
    };
    let report = match run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return match e {
                Error::Cyclic(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            };
        }
    };
    let mut doc = serde_json::to_string_pretty(&report).expect("report serializes");
    doc.push('\n');
    match args.out {
        Some(path) => {
            if let Err(e) = fs::write(&path, doc) {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::FAILURE;
            }
        }
        None => print!("{doc}"),
    }
    ExitCode::SUCCESS
}
