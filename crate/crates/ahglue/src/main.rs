use std::path::PathBuf;
use std::process::ExitCode;

use ahglue::{execute, HarnessError, Mode, RunConfig, SeedFamily};
use clap::Parser;

/// Glue two asymptotically hyperbolic CMC data sets through a neck and
/// measure how the constraint corrections scale with the neck size.
#[derive(Parser, Debug)]
#[command(name = "ahglue", version)]
struct Cli {
    /// JSON config file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Neck parameter of a single run.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Run a sweep; an optional comma-separated list replaces the configured values.
    #[arg(long, num_args = 0..=1, value_delimiter = ',', require_equals = true)]
    sweep: Option<Vec<f64>>,
    /// Nodes per grid edge at the smallest epsilon.
    #[arg(long)]
    grid_n: Option<usize>,
    #[arg(long, value_enum)]
    seed_family: Option<SeedFamily>,
    /// Directory for the CSV and JSON reports, created if missing.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Relative residual target of the Krylov solves.
    #[arg(long)]
    tol_linear: Option<f64>,
    /// Stop the Picard iteration once the update falls below this.
    #[arg(long)]
    tol_picard: Option<f64>,
    /// Exit with status 4 if any acceptance check fails.
    #[arg(long)]
    check: bool,
    /// Print the effective config and exit.
    #[arg(long)]
    print_config: bool,
}

fn load(cli: &Cli) -> Result<RunConfig, HarnessError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(e) = cli.epsilon {
        cfg.epsilon = e;
    }
    if let Some(s) = &cli.sweep {
        if !s.is_empty() {
            cfg.sweep = s.clone();
        }
    }
    if let Some(n) = cli.grid_n {
        cfg.grid_n = n;
    }
    if let Some(f) = cli.seed_family {
        cfg.seed_family = f;
    }
    if let Some(d) = &cli.out_dir {
        cfg.out_dir = d.clone();
    }
    if let Some(t) = cli.tol_linear {
        cfg.tol_linear = t;
    }
    if let Some(t) = cli.tol_picard {
        cfg.tol_picard = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main_inner(cli: &Cli) -> Result<(), HarnessError> {
    let cfg = load(cli)?;
    if cli.print_config {
        println!("{}", cfg.to_json());
        return Ok(());
    }
    let mode = if cli.sweep.is_some() { Mode::Sweep } else { Mode::Single };
    let outcome = execute(&cfg, mode, |line| eprintln!("{line}"))?;
    for f in &outcome.files {
        println!("{}", f.display());
    }
    if outcome.failed_runs > 0 {
        return Err(HarnessError::FailedRuns(outcome.failed_runs));
    }
    if cli.check && outcome.failed_checks > 0 {
        return Err(HarnessError::Check(outcome.failed_checks));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ahglue: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
