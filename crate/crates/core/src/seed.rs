//! Seed data sets: closed-form perturbations of hyperbolic space and the
//! constraint-solving factory that turns them into asymptotically hyperbolic data.

use crate::boundary::SolveDomain;
use crate::error::{GlueError, Result};
use crate::grid::{ChartGrid, Covariance, Field, MetricField, SymTensorField};
use crate::linalg::{Sym3, Vec3};
use crate::operators::{scalar_curvature, LichnerowiczTerms, OperatorContext};
use crate::prelude::*;
use crate::solve::{lichnerowicz_solve, york_project, SolveDiagnostics, SolveSettings};
use crate::splice::{ChartSeed, Provenance, SeedData};
use serde::{Deserialize, Serialize};

/// Closed-form conformal data on the half-space chart.
///
/// `lambda = rho^-2 (delta + m)` with `m_11 = -m_22 = a rho^2 exp(-(rho^2 + |theta|^2) / w^2)`
/// and `mu_bar = b(rho, theta) (c11 (dth1^2 - dth2^2) + 2 c12 dth1 dth2)`, projected
/// trace-free for `lambda`; `b` is 1 or a compact bump of radius `mu_radius`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AcSeedSpec {
    pub metric_amplitude: f64,
    pub metric_width: f64,
    pub mu_diagonal: f64,
    pub mu_off_diagonal: f64,
    pub mu_radius: Option<f64>,
    /// Spacing of the seed solve grid.
    pub grid_spacing: f64,
    /// Seed grid covers `floor <= rho <= extent`, `|theta_j| <= extent`.
    pub extent: f64,
    pub floor: f64,
}

impl Default for AcSeedSpec {
    fn default() -> Self {
        AcSeedSpec {
            metric_amplitude: 0.5,
            metric_width: 0.5,
            mu_diagonal: 1.0,
            mu_off_diagonal: 0.5,
            mu_radius: None,
            grid_spacing: 0.05,
            extent: 1.6,
            floor: 0.025,
        }
    }
}

impl AcSeedSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.metric_amplitude, self.mu_diagonal, self.mu_off_diagonal].iter().all(|v| v.is_finite());
        if !finite || !(self.metric_width > 0.0) || self.mu_radius.is_some_and(|r| !(r > 0.0)) {
            return Err(GlueError::Parameter("seed amplitudes must be finite and widths positive".into()));
        }
        if !(self.floor > 0.0) || !(self.grid_spacing > 0.0) || self.extent < self.floor + 8.0 * self.grid_spacing {
            return Err(GlueError::Parameter(format!(
                "seed grid spacing {} too coarse for extent {}",
                self.grid_spacing, self.extent
            )));
        }
        Ok(())
    }
}

/// The closed-form seed: `lambda` and its projected `mu_bar`, no constraint solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticSeed {
    pub spec: AcSeedSpec,
}

impl AnalyticSeed {
    fn envelope(&self, p: &Vec3) -> f64 {
        match self.spec.mu_radius {
            None => 1.0,
            Some(s) => {
                let t = 1.0 - (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) / (s * s);
                if t > 0.0 {
                    t * t * t * t
                } else {
                    0.0
                }
            }
        }
    }

    fn raw_mu(&self, p: &Vec3) -> Sym3 {
        let e = self.envelope(p);
        let (a, b) = (self.spec.mu_diagonal * e, self.spec.mu_off_diagonal * e);
        Sym3([0.0, 0.0, 0.0, a, b, -a])
    }
}

impl ChartSeed for AnalyticSeed {
    fn metric_error(&self, p: &Vec3) -> Sym3 {
        let s = &self.spec;
        let v = s.metric_amplitude * p[0] * p[0] * (-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) / (s.metric_width * s.metric_width)).exp();
        Sym3([0.0, 0.0, 0.0, v, 0.0, -v])
    }

    fn mu_bar(&self, p: &Vec3) -> Sym3 {
        let gbar = Sym3::IDENTITY.add(&self.metric_error(p));
        let gi = gbar.inverse().unwrap_or(Sym3::IDENTITY);
        self.raw_mu(p).trace_free(&gbar, &gi)
    }
}

/// Solved seed sampled on its grid, falling back to the closed form elsewhere.
#[derive(Clone, Debug)]
pub struct GridSeed {
    grid: ChartGrid,
    /// `rho^2 g - delta`.
    metric_error: SymTensorField,
    /// `rho mu`.
    mu_bar: SymTensorField,
    fallback: AnalyticSeed,
}

impl GridSeed {
    pub fn grid(&self) -> &ChartGrid {
        &self.grid
    }
}

impl ChartSeed for GridSeed {
    fn metric_error(&self, p: &Vec3) -> Sym3 {
        if self.grid.contains(p) {
            if let Ok(v) = self.metric_error.interpolate(p) {
                return v;
            }
        }
        self.fallback.metric_error(p)
    }

    fn mu_bar(&self, p: &Vec3) -> Sym3 {
        if self.grid.contains(p) {
            if let (Ok(m), Ok(mu)) = (self.metric_error.interpolate(p), self.mu_bar.interpolate(p)) {
                let gbar = Sym3::IDENTITY.add(&m);
                if let Some(gi) = gbar.inverse() {
                    return mu.trace_free(&gbar, &gi);
                }
            }
        }
        self.fallback.mu_bar(p)
    }
}

/// Solver record of the seed factory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub york: SolveDiagnostics,
    pub lichnerowicz: SolveDiagnostics,
    /// `sup rho^-1 |div mu|` before and `sup rho^-1 |div nu|` after projection.
    pub div_before: f64,
    pub div_after: f64,
    /// `sup |L(psi)|` over interior nodes.
    pub lichnerowicz_residual: f64,
    pub psi_deviation: f64,
    /// Trace of the second fundamental form, fixed to 3.
    pub mean_curvature: f64,
}

/// Run the York projection and the Lichnerowicz solve for `spec` on its seed
/// grid and return both charts as copies of the result.
pub fn ac_seed_data(spec: &AcSeedSpec, settings: &SolveSettings) -> Result<(SeedData, SeedReport)> {
    spec.validate()?;
    let h = spec.grid_spacing;
    let grid = ChartGrid::covering(spec.floor, spec.extent, spec.extent, h)?;
    let analytic = AnalyticSeed { spec: *spec };
    let lambda = MetricField::new(Field::from_fn(grid, Covariance::Sym2, |_, p| {
        Sym3::IDENTITY.add(&analytic.metric_error(&p)).scale(1.0 / (p[0] * p[0]))
    }))?;
    let mu = Field::from_fn(grid, Covariance::Sym2, |_, p| analytic.mu_bar(&p).scale(1.0 / p[0]));
    let rho = Field::from_fn(grid, Covariance::Scalar, |_, p| p[0]);
    let ctx = OperatorContext::new(&lambda)?;
    let domain = SolveDomain::box_interior(grid);
    let york = york_project(&ctx, &domain, &mu, &rho, settings)?;
    let terms = LichnerowiczTerms::new(&ctx, scalar_curvature(&ctx), &york.nu)?;
    let lich = lichnerowicz_solve(&ctx, &domain, terms, &rho, settings)?;
    let psi = lich.psi.data();
    let metric_error = Field::from_fn(grid, Covariance::Sym2, |n, p| {
        let u2 = psi[n] * psi[n];
        Sym3::IDENTITY.add(&analytic.metric_error(&p)).scale(u2 * u2).sub(&Sym3::IDENTITY)
    });
    let mu_bar = Field::from_fn(grid, Covariance::Sym2, |n, p| york.nu.at(n).scale(p[0] / (psi[n] * psi[n])));
    let report = SeedReport {
        york: york.diagnostics,
        lichnerowicz: lich.diagnostics,
        div_before: york.div_mu,
        div_after: york.div_nu,
        lichnerowicz_residual: lich.residual,
        psi_deviation: psi.iter().fold(0.0f64, |m, v| m.max((v - 1.0).abs())),
        mean_curvature: 3.0,
    };
    let chart: Arc<dyn ChartSeed> = Arc::new(GridSeed { grid, metric_error, mu_bar, fallback: analytic });
    Ok((SeedData::symmetric(chart, Provenance::AcNumeric), report))
}

/// Closed-form seeds without the constraint solve.
pub fn analytic_seed_data(spec: &AcSeedSpec) -> Result<SeedData> {
    spec.validate()?;
    Ok(SeedData::symmetric(Arc::new(AnalyticSeed { spec: *spec }), Provenance::Analytic))
}
