use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use linchaos_cli::{run, CliError, ExperimentConfig, RunContext};

/// Detect, certify and construct chaotic behaviour of operators on weighted
/// sequence spaces.
#[derive(Debug, Parser)]
#[command(name = "linchaos", version)]
struct Args {
    /// Experiment config (JSON).
    #[arg(long, env = "LINCHAOS_CONFIG")]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long, env = "LINCHAOS_OUT")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, env = "LINCHAOS_WORKERS")]
    workers: Option<usize>,
    /// Orbit work budget; overrides `budget.orbit`.
    #[arg(long, env = "LINCHAOS_BUDGET")]
    budget: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("linchaos: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(args: &Args) -> Result<Vec<String>, CliError> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let ctx = RunContext::new(&cfg, args.out.clone(), args.budget);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = args.workers {
        if w == 0 {
            return Err(CliError::Schema("--workers must be at least 1".into()));
        }
        pool = pool.num_threads(w);
    }
    let pool = pool.build().map_err(|e| CliError::Schema(e.to_string()))?;
    let outcome = pool.install(|| run(&cfg, &ctx))?;
    Ok(outcome.summary)
}
