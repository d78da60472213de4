//! Files written by a run: `summary.json`, `runs.csv`, `rates.csv` and one
//! `fields_eps_<eps>.csv` mid-plane dump per converged epsilon.

use std::fs;
use std::path::{Path, PathBuf};

use ahglue_core::operators::{constraint_residuals, scalar_curvature, OperatorContext};
use ahglue_core::pipeline::{GlueReport, GlueRun, RateTable, BOUND_SLACK};
use ahglue_core::seed::SeedReport;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::HarnessError;
use crate::run::Check;

pub const CALIBRATION_NOTE: &str =
    "C = norm(eps_max) / sqrt(eps_max); bound checked: norm(eps) <= 1.2 C sqrt(eps) for every eps";

#[derive(Debug, Serialize)]
pub struct RunRecord<'a> {
    pub epsilon: f64,
    pub status: &'static str,
    /// Stage-tagged error message of a failed run.
    pub error: Option<String>,
    pub report: Option<&'a GlueReport>,
    pub checks: Vec<Check>,
}

#[derive(Debug, Serialize)]
pub struct Summary<'a> {
    pub calibration: &'static str,
    pub config: &'a RunConfig,
    pub seed: Option<&'a SeedReport>,
    pub runs: Vec<RunRecord<'a>>,
    pub rate_table: Option<&'a RateTable>,
    pub sweep_checks: Vec<Check>,
}

impl Summary<'_> {
    pub fn failed_checks(&self) -> usize {
        let per_run = self.runs.iter().flat_map(|r| &r.checks).filter(|c| !c.passed).count();
        per_run + self.sweep_checks.iter().filter(|c| !c.passed).count()
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

pub fn ensure_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

pub fn write_summary(dir: &Path, summary: &Summary) -> Result<PathBuf, HarnessError> {
    let path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(summary)?;
    fs::write(&path, text + "\n").map_err(io_err(&path))?;
    Ok(path)
}

/// Scalar columns of `runs.csv`, in order.
pub const RUN_COLUMNS: &[&str] = &[
    "epsilon",
    "h",
    "b",
    "r_in",
    "r_out",
    "y_min",
    "nodes",
    "active_nodes",
    "div_mu",
    "div_mu_closed_form",
    "nu_minus_mu_c0",
    "nu_minus_mu_c1",
    "york_divergence_ratio",
    "york_trace",
    "lichnerowicz_at_one",
    "lichnerowicz_residual",
    "psi_minus_one",
    "psi_minus_one_c2",
    "f_min",
    "f_excess",
    "laplace_rho_max",
    "defining_function_constant",
    "defining_function_max_deviation",
    "momentum_residual",
    "hamiltonian_residual",
    "momentum_floor",
    "hamiltonian_floor",
    "trace_deviation",
    "exterior_metric_deviation",
    "exterior_k_deviation",
    "picard_steps",
    "contraction_max",
    "york_linear_iterations",
    "lichnerowicz_linear_iterations",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn run_row(r: &GlueReport) -> Vec<String> {
    let f = |x: f64| x.to_string();
    vec![
        f(r.epsilon),
        f(r.h),
        f(r.b),
        f(r.r_in),
        f(r.r_out),
        f(r.y_min),
        r.nodes.to_string(),
        r.active_nodes.to_string(),
        f(r.div_mu),
        f(r.div_mu_closed_form),
        f(r.nu_minus_mu_c0),
        f(r.nu_minus_mu_c1),
        opt(r.york_divergence_ratio),
        f(r.york_trace),
        f(r.lichnerowicz_at_one),
        f(r.lichnerowicz_residual),
        f(r.psi_minus_one),
        f(r.psi_minus_one_c2),
        f(r.f_min),
        f(r.f_excess),
        f(r.laplace_rho_max),
        f(r.defining_function.constant),
        f(r.defining_function.max_deviation),
        f(r.momentum_residual),
        f(r.hamiltonian_residual),
        f(r.momentum_floor),
        f(r.hamiltonian_floor),
        f(r.trace_deviation),
        opt(r.exterior_metric_deviation),
        opt(r.exterior_k_deviation),
        r.picard_steps.to_string(),
        opt(r.contraction_max),
        r.york.linear_iterations().to_string(),
        r.lichnerowicz.linear_iterations().to_string(),
    ]
}

pub fn write_runs(dir: &Path, reports: &[&GlueReport]) -> Result<PathBuf, HarnessError> {
    let path = dir.join("runs.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(RUN_COLUMNS)?;
    for r in reports {
        w.write_record(run_row(r))?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(path)
}

/// Rate table with a leading `#` line stating the calibration convention.
pub fn write_rates(dir: &Path, table: &RateTable, epsilons: &[f64]) -> Result<PathBuf, HarnessError> {
    let path = dir.join("rates.csv");
    let mut buf = format!("# {CALIBRATION_NOTE}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let mut header: Vec<String> =
            ["norm", "slope", "intercept", "fit_residual", "calibration", "bound_factor", "bound_ok", "monotone"]
                .iter()
                .map(|s| s.to_string())
                .collect();
        header.extend(epsilons.iter().map(|e| format!("eps_{e}")));
        w.write_record(&header)?;
        for row in &table.rows {
            let mut rec = vec![
                row.name.clone(),
                opt(row.fit.map(|f| f.slope)),
                opt(row.fit.map(|f| f.intercept)),
                opt(row.fit.map(|f| f.residual)),
                opt(row.calibration),
                BOUND_SLACK.to_string(),
                row.bound_ok.to_string(),
                row.monotone.to_string(),
            ];
            rec.extend(epsilons.iter().map(|e| opt(row.values.iter().find(|(x, _)| x == e).map(|(_, v)| *v))));
            w.write_record(&rec)?;
        }
        w.flush().map_err(io_err(&path))?;
    }
    fs::write(&path, buf).map_err(io_err(&path))?;
    Ok(path)
}

pub const FIELD_COLUMNS: &[&str] = &[
    "y",
    "x1",
    "x2",
    "role",
    "rho",
    "psi",
    "mu_norm",
    "nu_minus_mu_norm",
    "trace_k_out",
    "hamiltonian",
    "momentum_norm",
];

pub fn field_file_name(epsilon: f64) -> String {
    format!("fields_eps_{epsilon}.csv")
}

/// Nodes of the `x2 = 0` plane with pointwise glued and solved quantities.
pub fn write_fields(dir: &Path, run: &GlueRun) -> Result<PathBuf, HarnessError> {
    let path = dir.join(field_file_name(run.report.epsilon));
    let grid = *run.glued.neck.grid();
    let domain = &run.glued.neck.domain;
    let out_ctx = OperatorContext::new(&run.metric_out)?;
    let (mom, ham) = constraint_residuals(&out_ctx, &run.k_out, &scalar_curvature(&out_ctx))?;
    let mid = grid.n_x2 / 2;
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(FIELD_COLUMNS)?;
    for iy in 0..grid.n_y {
        for i1 in 0..grid.n_x1 {
            let n = grid.index([iy, i1, mid]);
            let p = grid.point(n);
            let g = run.glued.metric.at(n);
            let Some(gi) = g.inverse() else { continue };
            let dev = run.york.nu.at(n).sub(run.glued.mu.at(n));
            let m = mom.at(n);
            let m_up = out_ctx.sharp(m, n);
            let mom_norm = (m_up[0] * m[0] + m_up[1] * m[1] + m_up[2] * m[2]).max(0.0).sqrt();
            w.write_record([
                p[0].to_string(),
                p[1].to_string(),
                p[2].to_string(),
                format!("{:?}", domain.role(n)).to_lowercase(),
                run.glued.rho.at(n).to_string(),
                run.lichnerowicz.psi.at(n).to_string(),
                run.glued.mu.at(n).norm_sq(&gi).max(0.0).sqrt().to_string(),
                dev.norm_sq(&gi).max(0.0).sqrt().to_string(),
                out_ctx.inverse(n).trace_with(run.k_out.at(n)).to_string(),
                ham.at(n).to_string(),
                mom_norm.to_string(),
            ])?;
        }
    }
    w.flush().map_err(io_err(&path))?;
    Ok(path)
}
