//! Command-line harness around `ahglue-core`: configuration, runs, sweeps and
//! report files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod run;

use std::path::PathBuf;

pub use config::{RunConfig, SeedFamily};
pub use error::HarnessError;

use output::{RunRecord, Summary};
use run::{build_seeds, run_checks, single_run, sweep, sweep_checks};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Single,
    Sweep,
}

/// What [`execute`] wrote and how the checks came out.
#[derive(Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub failed_checks: usize,
    pub failed_runs: usize,
}

/// Run the configured job, write every output file and return the outcome.
/// `log` receives one progress line per finished stage.
pub fn execute(cfg: &RunConfig, mode: Mode, mut log: impl FnMut(&str)) -> Result<Outcome, HarnessError> {
    cfg.validate()?;
    output::ensure_dir(&cfg.out_dir)?;
    let (seeds, seed_report) = build_seeds(cfg)?;
    if let Some(r) = &seed_report {
        log(&format!(
            "seed: psi deviation {:.3e}, divergence {:.3e} -> {:.3e}",
            r.psi_deviation, r.div_before, r.div_after
        ));
    }
    let mut files = Vec::new();
    let tol = cfg.tol_linear;
    let (results, table, epsilons) = match mode {
        Mode::Single => {
            let run = match single_run(cfg, &seeds) {
                Err(HarnessError::Config(m)) => return Err(HarnessError::Config(m)),
                r => r.map_err(|e| e.to_string()),
            };
            if let Ok(r) = &run {
                log(&format!("eps {}: done, {} Picard steps", cfg.epsilon, r.report.picard_steps));
            }
            (vec![(cfg.epsilon, run)], None, vec![cfg.epsilon])
        }
        Mode::Sweep => {
            let s = sweep(cfg, &seeds, |eps, r| match r {
                Ok(run) => log(&format!("eps {eps}: done, {} Picard steps", run.report.picard_steps)),
                Err(e) => log(&format!("eps {eps}: failed: {e}")),
            })?;
            let results = s.runs.into_iter().map(|(e, r)| (e, r.map_err(|x| x.to_string()))).collect();
            (results, Some(s.table), cfg.sweep.clone())
        }
    };

    let mut records = Vec::new();
    let mut failed_runs = 0;
    for (eps, r) in &results {
        match r {
            Ok(run) => {
                files.push(output::write_fields(&cfg.out_dir, run)?);
                records.push(RunRecord {
                    epsilon: *eps,
                    status: "ok",
                    error: None,
                    report: Some(&run.report),
                    checks: run_checks(&run.report, tol),
                });
            }
            Err(msg) => {
                failed_runs += 1;
                records.push(RunRecord { epsilon: *eps, status: "failed", error: Some(msg.clone()), report: None, checks: vec![] });
            }
        }
    }
    let reports: Vec<_> = records.iter().filter_map(|r| r.report).collect();
    files.push(output::write_runs(&cfg.out_dir, &reports)?);
    if let Some(t) = &table {
        files.push(output::write_rates(&cfg.out_dir, t, &epsilons)?);
    }
    let summary = Summary {
        calibration: output::CALIBRATION_NOTE,
        config: cfg,
        seed: seed_report.as_ref(),
        runs: records,
        rate_table: table.as_ref(),
        sweep_checks: table.as_ref().map(|t| sweep_checks(t, epsilons.len())).unwrap_or_default(),
    };
    let failed_checks = summary.failed_checks();
    files.push(output::write_summary(&cfg.out_dir, &summary)?);
    Ok(Outcome { files, failed_checks, failed_runs })
}
