//! End-to-end gluing run, epsilon sweeps and log-log rate fits.

use crate::error::{GlueError, Result};
use crate::geometry::{weighted_grid_norm, NormOrder};
use crate::grid::{Covariance, Field, MetricField, ScalarField, SymTensorField};
use crate::linalg::Sym3;
use crate::operators::{
    constraint_residuals, scalar_curvature, spliced_divergence_oracle, superharmonicity_check, LichnerowiczTerms, OperatorContext,
};
use crate::prelude::*;
use crate::solve::{lichnerowicz_solve, weighted_one_form_sup, york_project, LichnerowiczSolution, SolveDiagnostics, SolveSettings, YorkSolution};
use crate::splice::{defining_function_estimate_check, splice, DefiningFunctionReport, GluedData, SeedData, SpliceConfig};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub splice: SpliceConfig,
    pub solve: SolveSettings,
    /// Seed-chart radii `|eps p|` of the exterior comparison shell.
    pub exterior_band: [f64; 2],
    /// Height of the near-boundary band for the defining-function test.
    pub boundary_band: f64,
}

impl PipelineConfig {
    pub fn new(splice: SpliceConfig) -> Self {
        PipelineConfig { splice, solve: SolveSettings::default(), exterior_band: [0.55, 0.65], boundary_band: 0.6 }
    }
}

/// Measured quantities of one gluing run. `None` marks a skipped measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlueReport {
    pub epsilon: f64,
    pub h: f64,
    pub b: f64,
    pub r_in: f64,
    pub r_out: f64,
    pub y_min: f64,
    pub nodes: usize,
    pub active_nodes: usize,
    /// `sup rho^-1 |div mu_eps|` from the difference stencil.
    pub div_mu: f64,
    /// Same norm of the closed-form cutoff divergence.
    pub div_mu_closed_form: f64,
    /// Weighted `C^0_1` and `C^1_1` norms of `nu - mu`.
    pub nu_minus_mu_c0: f64,
    pub nu_minus_mu_c1: f64,
    /// `sup rho^-1 |div nu| / sup rho^-1 |div mu|`; skipped when `mu` is divergence free.
    pub york_divergence_ratio: Option<f64>,
    pub york_trace: f64,
    /// `sup |L(1)|`.
    pub lichnerowicz_at_one: f64,
    /// `sup |L(psi)|`.
    pub lichnerowicz_residual: f64,
    pub psi_minus_one: f64,
    /// Unweighted discrete `C^2` norm of `psi - 1`.
    pub psi_minus_one_c2: f64,
    pub f_min: f64,
    /// `sup |f - |nu|^2 - 3|`.
    pub f_excess: f64,
    pub laplace_rho_max: f64,
    pub defining_function: DefiningFunctionReport,
    pub momentum_residual: f64,
    pub hamiltonian_residual: f64,
    /// Same residuals for the unglued first seed sampled on the neck grid.
    pub momentum_floor: f64,
    pub hamiltonian_floor: f64,
    /// `sup |tr_{g_out} K_out - 3|`.
    pub trace_deviation: f64,
    /// `sup |psi^4 g_eps - g|_g` and `sup |K_out - K|_g` on the exterior shell.
    pub exterior_metric_deviation: Option<f64>,
    pub exterior_k_deviation: Option<f64>,
    pub picard_steps: usize,
    pub contraction_max: Option<f64>,
    pub york: SolveDiagnostics,
    pub lichnerowicz: SolveDiagnostics,
}

/// Report plus the fields it was measured on.
#[derive(Clone, Debug)]
pub struct GlueRun {
    pub report: GlueReport,
    pub glued: GluedData,
    pub york: YorkSolution,
    pub lichnerowicz: LichnerowiczSolution,
    pub metric_out: MetricField,
    pub k_out: SymTensorField,
}

fn sup_over(mask: &[bool], v: impl Fn(usize) -> f64) -> f64 {
    (0..mask.len()).filter(|&n| mask[n]).map(v).fold(0.0, f64::max)
}

/// Splice, project, solve, recompose and measure.
pub fn run_glue_pipeline(seeds: &SeedData, config: &PipelineConfig) -> Result<GlueRun> {
    let sc = &config.splice;
    let glued = splice(sc, seeds).map_err(|e| e.in_stage("splice"))?;
    let grid = *glued.neck.grid();
    let domain = &glued.neck.domain;
    let mask = domain.active_mask();
    let ctx = OperatorContext::new(&glued.metric).map_err(|e| e.in_stage("operators"))?;
    let rho = &glued.rho;

    let oracle = spliced_divergence_oracle(sc, seeds, &grid).map_err(|e| e.in_stage("operators"))?;
    let div_mu_closed_form = weighted_one_form_sup(&ctx, domain, oracle.data(), rho);
    let york = york_project(&ctx, domain, &glued.mu, rho, &config.solve).map_err(|e| e.in_stage("york"))?;
    let diff = york.nu.sub(&glued.mu)?;
    let nu_minus_mu_c0 = weighted_grid_norm(&diff, rho, 1.0, NormOrder::C0, Some(&glued.metric), Some(&mask))?;
    let nu_minus_mu_c1 = weighted_grid_norm(&diff, rho, 1.0, NormOrder::C1, Some(&glued.metric), Some(&mask))?;

    let terms = LichnerowiczTerms::new(&ctx, scalar_curvature(&ctx), &york.nu)?;
    let f_excess = sup_over(&mask, |n| (terms.f.at(n) - terms.nu_sq.at(n) - 3.0).abs());
    let lich = lichnerowicz_solve(&ctx, domain, terms, rho, &config.solve).map_err(|e| e.in_stage("lichnerowicz"))?;
    let psi = &lich.psi;
    let psi_dev = psi.map(Covariance::Scalar, |_, v| v - 1.0);
    let ones = Field::from_fn(grid, Covariance::Scalar, |_, _| 1.0);
    let psi_minus_one_c2 = weighted_grid_norm(&psi_dev, &ones, 0.0, NormOrder::C2, Some(&glued.metric), Some(&mask))?;

    let (_, laplace_rho_max) = superharmonicity_check(&ctx, rho, Some(&mask))?;
    let band_mask: Vec<bool> = (0..grid.len()).map(|n| domain.role(n) != crate::boundary::NodeRole::Unused).collect();
    let defining_function =
        defining_function_estimate_check(&ctx, rho, sc.epsilon, config.boundary_band, Some(&band_mask))?;

    // recomposition
    let psi4 = psi.map(Covariance::Scalar, |_, u| u * u * u * u);
    let metric_out = glued.metric.conformal(&psi4).map_err(|e| e.in_stage("recompose"))?;
    let k_out = Field::from_fn(grid, Covariance::Sym2, |n, _| {
        let u = *psi.at(n);
        york.nu.at(n).scale(1.0 / (u * u)).add(metric_out.at(n))
    });
    let out_ctx = OperatorContext::new(&metric_out).map_err(|e| e.in_stage("recompose"))?;
    let (mom, ham) = constraint_residuals(&out_ctx, &k_out, &scalar_curvature(&out_ctx))?;
    let momentum_residual = sup_over(&mask, |n| {
        let w = mom.at(n);
        crate::linalg::dot3(&out_ctx.sharp(w, n), w).max(0.0).sqrt()
    });
    let hamiltonian_residual = sup_over(&mask, |n| ham.at(n).abs());
    let trace_deviation = sup_over(&mask, |n| (out_ctx.inverse(n).trace_with(k_out.at(n)) - 3.0).abs());

    let (momentum_floor, hamiltonian_floor) = seed_floor(seeds, &glued, &mask)?;
    let (exterior_metric_deviation, exterior_k_deviation) =
        exterior_deviation(seeds, &glued, &metric_out, &k_out, &mask, config.exterior_band);

    let report = GlueReport {
        epsilon: sc.epsilon,
        h: grid.h,
        b: glued.b,
        r_in: sc.r_in(),
        r_out: sc.r_out(),
        y_min: grid.y_min,
        nodes: grid.len(),
        active_nodes: domain.active().len(),
        div_mu: york.div_mu,
        div_mu_closed_form,
        nu_minus_mu_c0,
        nu_minus_mu_c1,
        york_divergence_ratio: (york.div_mu > 0.0).then(|| york.div_nu / york.div_mu),
        york_trace: york.trace,
        lichnerowicz_at_one: lich.residual_at_one,
        lichnerowicz_residual: lich.residual,
        psi_minus_one: crate::solve::active_sup(domain, psi_dev.data()),
        psi_minus_one_c2,
        f_min: lich.f_min,
        f_excess,
        laplace_rho_max,
        defining_function,
        momentum_residual,
        hamiltonian_residual,
        momentum_floor,
        hamiltonian_floor,
        trace_deviation,
        exterior_metric_deviation,
        exterior_k_deviation,
        picard_steps: lich.steps,
        contraction_max: (!lich.diagnostics.contraction_factors.is_empty()).then(|| lich.diagnostics.max_contraction()),
        york: york.diagnostics.clone(),
        lichnerowicz: lich.diagnostics.clone(),
    };
    Ok(GlueRun { report, glued, york, lichnerowicz: lich, metric_out, k_out })
}

/// Constraint residuals of the first seed pulled back to the neck grid, over
/// active nodes with `r >= 2` where the glued data equals it.
fn seed_floor(seeds: &SeedData, glued: &GluedData, mask: &[bool]) -> Result<(f64, f64)> {
    let grid = *glued.neck.grid();
    let eps = glued.neck.config.epsilon;
    let chart = &seeds.charts[0];
    let g = MetricField::new(Field::from_fn(grid, Covariance::Sym2, |_, p| {
        let q = [eps * p[0], eps * p[1], eps * p[2]];
        Sym3::IDENTITY.add(&chart.metric_error(&q)).scale(1.0 / (p[0] * p[0]))
    }))
    .map_err(|e| e.in_stage("seed floor"))?;
    let k = Field::from_fn(grid, Covariance::Sym2, |n, p| {
        let q = [eps * p[0], eps * p[1], eps * p[2]];
        chart.mu_bar(&q).scale(eps * eps / q[0]).add(g.at(n))
    });
    let ctx = OperatorContext::new(&g)?;
    let (mom, ham) = constraint_residuals(&ctx, &k, &scalar_curvature(&ctx))?;
    let far: Vec<bool> = (0..grid.len())
        .map(|n| {
            let p = grid.point(n);
            mask[n] && (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) >= 4.0
        })
        .collect();
    let m = sup_over(&far, |n| {
        let w = mom.at(n);
        crate::linalg::dot3(&ctx.sharp(w, n), w).max(0.0).sqrt()
    });
    Ok((m, sup_over(&far, |n| ham.at(n).abs())))
}

fn exterior_deviation(
    seeds: &SeedData,
    glued: &GluedData,
    metric_out: &MetricField,
    k_out: &SymTensorField,
    mask: &[bool],
    band: [f64; 2],
) -> (Option<f64>, Option<f64>) {
    let grid = *glued.neck.grid();
    let eps = glued.neck.config.epsilon;
    let chart = &seeds.charts[0];
    let (mut dg, mut dk, mut any) = (0.0f64, 0.0f64, false);
    for n in 0..grid.len() {
        if !mask[n] {
            continue;
        }
        let p = grid.point(n);
        let q = [eps * p[0], eps * p[1], eps * p[2]];
        let s = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
        if s < band[0] || s > band[1] {
            continue;
        }
        any = true;
        let g = Sym3::IDENTITY.add(&chart.metric_error(&q)).scale(1.0 / (p[0] * p[0]));
        let k = chart.mu_bar(&q).scale(eps * eps / q[0]).add(&g);
        let Some(gi) = g.inverse() else { continue };
        dg = dg.max(metric_out.at(n).sub(&g).norm_sq(&gi).sqrt());
        dk = dk.max(k_out.at(n).sub(&k).norm_sq(&gi).sqrt());
    }
    if any {
        (Some(dg), Some(dk))
    } else {
        (None, None)
    }
}

/// Least-squares fit `log norm = slope log eps + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
}

pub fn fit_rate(pairs: &[(f64, f64)]) -> Result<RateFit> {
    if pairs.len() < 3 {
        return Err(GlueError::Parameter(format!("rate fit needs at least 3 points, got {}", pairs.len())));
    }
    if let Some((e, v)) = pairs.iter().find(|(e, v)| !(*e > 0.0) || !(*v > 0.0)) {
        return Err(GlueError::Parameter(format!("rate fit needs positive values, got ({e}, {v})")));
    }
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|(e, _)| e.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|(_, v)| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(GlueError::Parameter("rate fit needs distinct epsilon values".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    Ok(RateFit { slope, intercept, residual: (ss / n).sqrt() })
}

/// Slack on the calibrated bound `norm(eps) <= slack C sqrt(eps)`.
pub const BOUND_SLACK: f64 = 1.2;

/// One tracked norm across a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub name: String,
    pub values: Vec<(f64, f64)>,
    pub fit: Option<RateFit>,
    /// `norm(eps_max) / sqrt(eps_max)`.
    pub calibration: Option<f64>,
    /// Every value satisfies the calibrated bound.
    pub bound_ok: bool,
    /// Values strictly decrease as epsilon decreases.
    pub monotone: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
    pub converged_runs: usize,
    /// Fewer than four converged runs.
    pub partial: bool,
}

impl RateTable {
    pub fn row(&self, name: &str) -> Option<&RateRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

/// Reads one tracked norm off a report.
pub type NormAccessor = fn(&GlueReport) -> Option<f64>;

/// Norms tracked in sweeps, by report accessor.
pub const TRACKED: &[(&str, NormAccessor)] = &[
    ("div_mu", |r| Some(r.div_mu)),
    ("div_mu_closed_form", |r| Some(r.div_mu_closed_form)),
    ("nu_minus_mu_c0", |r| Some(r.nu_minus_mu_c0)),
    ("nu_minus_mu_c1", |r| Some(r.nu_minus_mu_c1)),
    ("lichnerowicz_at_one", |r| Some(r.lichnerowicz_at_one)),
    ("psi_minus_one", |r| Some(r.psi_minus_one)),
    ("psi_minus_one_c2", |r| Some(r.psi_minus_one_c2)),
    ("contraction_max", |r| r.contraction_max),
    ("exterior_metric_deviation", |r| r.exterior_metric_deviation),
    ("exterior_k_deviation", |r| r.exterior_k_deviation),
    ("defining_function_constant", |r| Some(r.defining_function.constant)),
];

pub fn rate_row(name: &str, values: &[(f64, f64)]) -> RateRow {
    let mut values = values.to_vec();
    values.sort_by(|a, b| b.0.total_cmp(&a.0));
    let fit = fit_rate(&values).ok();
    let calibration = values.first().map(|(e, v)| v / e.sqrt());
    let bound_ok = match calibration {
        Some(c) => values.iter().all(|(e, v)| *v <= BOUND_SLACK * c * e.sqrt()),
        None => false,
    };
    let monotone = values.windows(2).all(|w| w[1].1 < w[0].1);
    RateRow { name: name.into(), values, fit, calibration, bound_ok, monotone }
}

pub fn rate_table(reports: &[GlueReport]) -> RateTable {
    let rows = TRACKED
        .iter()
        .map(|(name, get)| {
            let values: Vec<(f64, f64)> = reports.iter().filter_map(|r| get(r).map(|v| (r.epsilon, v))).collect();
            rate_row(name, &values)
        })
        .collect();
    RateTable { rows, converged_runs: reports.len(), partial: reports.len() < 4 }
}

/// Outcome of a sweep: one entry per epsilon, failures kept as errors.
#[derive(Clone, Debug)]
pub struct Sweep {
    pub runs: Vec<(f64, Result<GlueRun>)>,
    pub table: RateTable,
}

impl Sweep {
    pub fn reports(&self) -> Vec<&GlueReport> {
        self.runs.iter().filter_map(|(_, r)| r.as_ref().ok().map(|r| &r.report)).collect()
    }
}

/// Run the pipeline for each epsilon with the other settings of `base`;
/// `on_run` sees each result as it completes. A set `r_out` acts as a cap on `1/eps`.
pub fn epsilon_sweep(
    seeds: &SeedData,
    base: &PipelineConfig,
    epsilons: &[f64],
    mut on_run: impl FnMut(f64, &Result<GlueRun>),
) -> Result<Sweep> {
    if epsilons.len() < 4 {
        return Err(GlueError::Parameter(format!("a sweep needs at least 4 epsilon values, got {}", epsilons.len())));
    }
    let mut runs = Vec::with_capacity(epsilons.len());
    let mut reports = Vec::new();
    for &eps in epsilons {
        let mut cfg = *base;
        cfg.splice.epsilon = eps;
        cfg.splice.r_out = base.splice.r_out.map(|cap| cap.min(1.0 / eps));
        let run = run_glue_pipeline(seeds, &cfg);
        on_run(eps, &run);
        if let Ok(r) = &run {
            reports.push(r.report.clone());
        }
        runs.push((eps, run));
    }
    Ok(Sweep { runs, table: rate_table(&reports) })
}

/// Spacing and outer radius that keep one grid spacing across a sweep: the
/// largest box, at the smallest epsilon, gets `nodes` points across.
pub fn sweep_spacing(epsilons: &[f64], r_out_cap: f64, nodes: usize) -> Result<f64> {
    let eps_min = epsilons.iter().copied().fold(f64::INFINITY, f64::min);
    if !(eps_min > 0.0) || nodes < 8 {
        return Err(GlueError::Parameter("sweep needs positive epsilons and at least 8 nodes".into()));
    }
    let r = (1.0 / eps_min).min(r_out_cap);
    Ok(2.0 * r / (nodes - 1) as f64)
}

/// Unit scalar field, handy for unweighted norms.
pub fn unit_weight(grid: &crate::grid::ChartGrid) -> ScalarField {
    Field::from_fn(*grid, Covariance::Scalar, |_, _| 1.0)
}
