//! Seed construction, single runs, sweeps and the pass/fail checks.

use ahglue_core::pipeline::{epsilon_sweep, run_glue_pipeline, GlueReport, GlueRun, RateTable, Sweep};
use ahglue_core::seed::{ac_seed_data, SeedReport};
use ahglue_core::splice::SeedData;
use serde::Serialize;

use crate::config::{RunConfig, SeedFamily};
use crate::error::HarnessError;

/// Seeds for the configured family, with the factory report for numeric seeds.
pub fn build_seeds(cfg: &RunConfig) -> Result<(SeedData, Option<SeedReport>), HarnessError> {
    match cfg.seed_family {
        SeedFamily::ExactHyperbolic => Ok((SeedData::exact_hyperbolic(), None)),
        SeedFamily::AcNumeric => {
            let (seeds, report) = ac_seed_data(&cfg.seed, &cfg.solve_settings()).map_err(|e| e.in_stage("seed"))?;
            Ok((seeds, Some(report)))
        }
    }
}

pub fn single_run(cfg: &RunConfig, seeds: &SeedData) -> Result<GlueRun, HarnessError> {
    let mut pipeline = cfg.pipeline(&[cfg.epsilon])?;
    pipeline.splice.epsilon = cfg.epsilon;
    pipeline.splice.r_out = Some(cfg.r_out_cap.min(1.0 / cfg.epsilon));
    Ok(run_glue_pipeline(seeds, &pipeline)?)
}

pub fn sweep(cfg: &RunConfig, seeds: &SeedData, on_run: impl FnMut(f64, &ahglue_core::Result<GlueRun>)) -> Result<Sweep, HarnessError> {
    let pipeline = cfg.pipeline(&cfg.sweep)?;
    epsilon_sweep(seeds, &pipeline, &cfg.sweep, on_run).map_err(|e| HarnessError::Config(e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, limit, passed: value <= limit }
    }

    fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, limit, passed: value >= limit }
    }

    fn holds(name: &str, ok: bool) -> Self {
        Check { name: name.into(), value: ok as u8 as f64, limit: 1.0, passed: ok }
    }
}

/// Checks that apply to every converged run.
pub fn run_checks(report: &GlueReport, tol_linear: f64) -> Vec<Check> {
    let mut out = vec![
        Check::at_most("trace_deviation", report.trace_deviation, 1e-8),
        Check::at_most("lichnerowicz_residual", report.lichnerowicz_residual, 1e-8),
        Check::at_most("york_trace", report.york_trace, 1e-10),
        Check::at_most("picard_steps", report.picard_steps as f64, 20.0),
        Check::at_least("f_min", report.f_min, 2.5),
        Check::at_most("laplace_rho_max", report.laplace_rho_max, 10.0 * report.h * report.h),
    ];
    if let Some(r) = report.york_divergence_ratio {
        out.push(Check::at_most("york_divergence_ratio", r, 10.0 * tol_linear));
    }
    out
}

/// Norms whose calibrated square-root bound is checked across a sweep.
pub const BOUNDED_NORMS: &[&str] = &["div_mu_closed_form", "nu_minus_mu_c1", "lichnerowicz_at_one", "psi_minus_one"];

/// Minimum fitted slope for a bounded norm.
pub const MIN_SLOPE: f64 = 0.3;

/// Rate and monotonicity checks on a sweep table.
pub fn sweep_checks(table: &RateTable, expected_runs: usize) -> Vec<Check> {
    let mut out = vec![Check::at_least("converged_runs", table.converged_runs as f64, expected_runs as f64)];
    for name in BOUNDED_NORMS {
        let Some(row) = table.row(name) else { continue };
        out.push(Check::holds(&format!("{name}_bound"), row.bound_ok));
        let slope = row.fit.map_or(f64::NAN, |f| f.slope);
        out.push(Check { name: format!("{name}_slope"), value: slope, limit: MIN_SLOPE, passed: slope >= MIN_SLOPE });
    }
    for name in ["contraction_max", "exterior_metric_deviation", "exterior_k_deviation"] {
        if let Some(row) = table.row(name) {
            out.push(Check::holds(&format!("{name}_monotone"), row.monotone && !row.values.is_empty()));
        }
    }
    out
}
