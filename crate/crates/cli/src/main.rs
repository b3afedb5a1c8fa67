use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use impact_hedge_cli::{run, ExperimentConfig, Mode, RunInfo};

const THREADS_ENV: &str = "IMPACT_HEDGE_THREADS";

/// Super-replication prices and hedge checks under permanent market impact
/// with a gamma cap.
#[derive(Parser, Debug)]
#[command(name = "impact-hedge", version)]
struct Args {
    mode: Mode,
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory receiving the CSV files and manifest.txt.
    #[arg(long)]
    out: PathBuf,
    /// Overrides `simulation.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; the IMPACT_HEDGE_THREADS environment variable wins.
    #[arg(long)]
    threads: Option<usize>,
}

fn threads(flag: Option<usize>) -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n = v.trim().parse::<usize>().with_context(|| format!("{THREADS_ENV}={v} is not a thread count"))?;
            Ok(Some(n))
        }
        Err(_) => Ok(flag),
    }
}

fn main_inner() -> Result<()> {
    let args = Args::parse();
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let mut cfg = ExperimentConfig::from_toml(&text).with_context(|| format!("parsing {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        cfg.simulation.seed = seed;
    }
    if cfg.mode.is_some_and(|m| m != args.mode) {
        eprintln!("note: config mode {} replaced by command-line mode {}", cfg.mode.unwrap(), args.mode);
    }
    cfg.mode = Some(args.mode);
    let threads = threads(args.threads)?.filter(|&n| n > 0);
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("starting the thread pool")?;
    }
    let written = run(&cfg, &RunInfo { mode: args.mode, threads }, &args.out)?;
    for name in written {
        println!("{}", args.out.join(name).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
