//! Splicing two seed data sets through a neck at ideal-boundary points.
//!
//! Neck coordinates `(y, x)` cover the half-annulus `r_in <= r <= r_out`. The
//! first seed is seen through the dilation `p -> eps p`, the second through the
//! dilation composed with the inversion `I`.

use crate::boundary::{NodeRole, SolveDomain};
use crate::cutoff::{build_chi, build_f, build_phi, chi_argument, default_b, SmoothProfile};
use crate::error::{GlueError, Result};
use crate::fd;
use crate::geometry::inversion;
use crate::grid::{ChartGrid, Covariance, Field, MetricField, ScalarField, SymTensorField};
use crate::linalg::{Mat3, Sym3, Vec3, IDENTITY3};
use crate::operators::OperatorContext;
use crate::prelude::*;
use core::f64::consts::SQRT_2;
use serde::{Deserialize, Serialize};

/// One seed chart in background coordinates `(rho, theta1, theta2)`, with
/// `g = rho^-2 (delta + m)` and `mu = rho^-1 mu_bar`.
pub trait ChartSeed: Send + Sync {
    fn metric_error(&self, p: &Vec3) -> Sym3;
    fn mu_bar(&self, p: &Vec3) -> Sym3;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    ExactHyperbolic,
    AcNumeric,
    Analytic,
}

/// Hyperbolic space with `mu = 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct HyperbolicChart;

impl ChartSeed for HyperbolicChart {
    fn metric_error(&self, _: &Vec3) -> Sym3 {
        Sym3::ZERO
    }
    fn mu_bar(&self, _: &Vec3) -> Sym3 {
        Sym3::ZERO
    }
}

/// The two charts being glued.
#[derive(Clone)]
pub struct SeedData {
    pub charts: [Arc<dyn ChartSeed>; 2],
    pub provenance: Provenance,
    /// Both charts carry the same data.
    pub identical: bool,
}

impl core::fmt::Debug for SeedData {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("SeedData").field("provenance", &self.provenance).field("identical", &self.identical).finish()
    }
}

/// Sampled size of the seed error terms relative to their expected decay.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SeedStructure {
    /// `max |m_00| / rho^2`.
    pub normal_normal: f64,
    /// `max |m_0j| / rho^2`.
    pub normal_tangential: f64,
    /// `max |m_jk| / (rho + |theta|^2)`.
    pub tangential: f64,
    /// `max |tr_g mu|`.
    pub trace: f64,
}

impl SeedData {
    pub fn exact_hyperbolic() -> Self {
        let c: Arc<dyn ChartSeed> = Arc::new(HyperbolicChart);
        SeedData { charts: [c.clone(), c], provenance: Provenance::ExactHyperbolic, identical: true }
    }

    pub fn symmetric(chart: Arc<dyn ChartSeed>, provenance: Provenance) -> Self {
        SeedData { charts: [chart.clone(), chart], provenance, identical: true }
    }

    pub fn pair(first: Arc<dyn ChartSeed>, second: Arc<dyn ChartSeed>, provenance: Provenance) -> Self {
        SeedData { charts: [first, second], provenance, identical: false }
    }

    /// Check the error-term decay on a fixed sample of the unit half-ball.
    pub fn structure(&self) -> SeedStructure {
        let mut s = SeedStructure::default();
        for chart in &self.charts {
            for k in 1..=8 {
                let rho = 0.1 * k as f64;
                for (t1, t2) in [(0.0, 0.0), (0.3, -0.2), (-0.5, 0.4), (0.2, 0.6)] {
                    let p = [rho, t1, t2];
                    let m = chart.metric_error(&p);
                    let mu = chart.mu_bar(&p);
                    let rho2 = rho * rho;
                    s.normal_normal = s.normal_normal.max(m.get(0, 0).abs() / rho2);
                    s.normal_tangential = s.normal_tangential.max(m.get(0, 1).abs().max(m.get(0, 2).abs()) / rho2);
                    let tang = m.get(1, 1).abs().max(m.get(1, 2).abs()).max(m.get(2, 2).abs());
                    s.tangential = s.tangential.max(tang / (rho + t1 * t1 + t2 * t2));
                    let gbar = Sym3::IDENTITY.add(&m);
                    if let Some(gi) = gbar.inverse() {
                        s.trace = s.trace.max((gi.trace_with(&mu) * rho).abs());
                    }
                }
            }
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpliceConfig {
    pub epsilon: f64,
    /// Scale of `F`; `None` picks the smallest admissible value at least 4.
    pub b: Option<f64>,
    /// Inner truncation radius, default `max(eps, 0.05)`.
    pub r_in: Option<f64>,
    /// Outer truncation radius, default `min(1/eps, 20)`.
    pub r_out: Option<f64>,
    /// Grid spacing in neck coordinates.
    pub h: f64,
    /// Lowest grid row, default `2h`.
    pub y_min: Option<f64>,
    /// Reflect through `r = 1` instead of resolving the inner half.
    pub symmetric: bool,
}

impl SpliceConfig {
    pub fn new(epsilon: f64, h: f64) -> Self {
        SpliceConfig { epsilon, b: None, r_in: None, r_out: None, h, y_min: None, symmetric: true }
    }

    pub fn r_in(&self) -> f64 {
        self.r_in.unwrap_or(self.epsilon.max(0.05))
    }

    pub fn r_out(&self) -> f64 {
        self.r_out.unwrap_or((1.0 / self.epsilon).min(20.0))
    }

    pub fn y_min(&self) -> f64 {
        self.y_min.unwrap_or(2.0 * self.h)
    }

    pub fn b(&self) -> f64 {
        self.b.unwrap_or_else(default_b)
    }

    pub fn validate(&self) -> Result<()> {
        let eps = self.epsilon;
        if !(eps > 0.0 && eps < 1.0) {
            return Err(GlueError::Parameter(format!("epsilon {eps} must lie in (0, 1)")));
        }
        let (r_in, r_out) = (self.r_in(), self.r_out());
        if r_in < eps * (1.0 - 1e-12) || r_out > (1.0 / eps) * (1.0 + 1e-12) || !(r_in < r_out) {
            return Err(GlueError::Parameter(format!(
                "truncation radii ({r_in}, {r_out}) must satisfy eps <= r_in < r_out <= 1/eps"
            )));
        }
        let (lo, hi) = (1.0 / SQRT_2, SQRT_2);
        let inner_ok = self.symmetric || r_in < lo;
        if !inner_ok || r_out <= hi {
            return Err(GlueError::Parameter(format!(
                "cutoff transition [{lo:.3}, {hi:.3}] not inside ({r_in}, {r_out})"
            )));
        }
        // At least six spacings across 1/2 <= r <= 2.
        if !(self.h > 0.0) || self.h > 0.25 {
            return Err(GlueError::Parameter(format!("spacing {} too coarse to resolve 1/2 <= r <= 2", self.h)));
        }
        if self.y_min() >= lo {
            return Err(GlueError::Parameter(format!("y_min {} leaves the neck sphere unresolved", self.y_min())));
        }
        build_f(self.b())?;
        Ok(())
    }
}

/// Neck grid with node roles.
#[derive(Clone, Debug)]
pub struct NeckDomain {
    pub config: SpliceConfig,
    pub domain: SolveDomain,
}

impl NeckDomain {
    pub fn grid(&self) -> &ChartGrid {
        self.domain.grid()
    }
}

pub fn build_neck_domain(config: &SpliceConfig) -> Result<NeckDomain> {
    config.validate()?;
    let r_out = config.r_out();
    let grid = ChartGrid::covering(config.y_min(), r_out, r_out, config.h)?;
    let domain = SolveDomain::annulus(grid, config.r_in(), r_out, config.symmetric)?;
    Ok(NeckDomain { config: *config, domain })
}

/// Closed-form evaluation of the spliced data at arbitrary neck points.
#[derive(Clone)]
pub struct Splicer {
    pub config: SpliceConfig,
    pub seeds: SeedData,
    pub phi: SmoothProfile,
    pub f: SmoothProfile,
    pub chi: SmoothProfile,
}

#[inline]
fn radius(p: &Vec3) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

#[inline]
fn scaled(p: &Vec3, s: f64) -> Vec3 {
    [p[0] * s, p[1] * s, p[2] * s]
}

impl Splicer {
    pub fn new(config: &SpliceConfig, seeds: &SeedData) -> Result<Self> {
        Ok(Splicer { config: *config, seeds: seeds.clone(), phi: build_phi(), f: build_f(config.b())?, chi: build_chi() })
    }

    /// `(alpha_eps)^* g` of chart `i` at `p`.
    fn dilated_metric(&self, chart: usize, p: &Vec3) -> Sym3 {
        let m = self.seeds.charts[chart].metric_error(&scaled(p, self.config.epsilon));
        Sym3::IDENTITY.add(&m).scale(1.0 / (p[0] * p[0]))
    }

    /// Cut-off dilated `mu` of chart `i` at `p` and whether it is nonzero.
    fn dilated_mu(&self, chart: usize, p: &Vec3) -> Option<Sym3> {
        let eps = self.config.epsilon;
        // y^2 + eps |x|^2, the chart-side argument after dilation
        let arg = chi_argument(eps, &scaled(p, eps));
        if arg <= 2.0 {
            return None;
        }
        let c = self.chi.value(arg);
        let mb = self.seeds.charts[chart].mu_bar(&scaled(p, eps));
        Some(mb.scale(c * eps / p[0]))
    }

    /// Metric, partition weights and the inversion data at `p`.
    pub fn metric_at(&self, p: &Vec3) -> Result<Sym3> {
        let r = radius(p);
        let w1 = self.phi.value(r);
        let w2 = self.phi.value(1.0 / r);
        let mut g = Sym3::ZERO;
        if w1 > 0.0 {
            g = g.add(&self.dilated_metric(0, p).scale(w1));
        }
        if w2 > 0.0 {
            let (q, j) = inversion(p)?;
            g = g.add(&self.dilated_metric(1, &q).congruence(&j).scale(w2));
        }
        Ok(g)
    }

    /// `mu_eps` at `p` before trace projection; errors if it meets the blend region.
    pub fn raw_mu_at(&self, p: &Vec3) -> Result<Sym3> {
        let r = radius(p);
        let mut mu = Sym3::ZERO;
        let mut touched = false;
        if let Some(m) = self.dilated_mu(0, p) {
            mu = mu.add(&m);
            touched = true;
        }
        let (q, j) = inversion(p)?;
        if let Some(m) = self.dilated_mu(1, &q) {
            mu = mu.add(&m.congruence(&j));
            touched = true;
        }
        if touched && mu.max_abs() > 0.0 {
            let w = self.phi.value(r);
            if w > 0.0 && w < 1.0 {
                return Err(GlueError::Consistency(format!(
                    "mu support meets the metric blend at r = {r:.4}"
                )));
            }
        }
        Ok(mu)
    }

    /// `mu_eps` projected trace-free with respect to `g_eps`.
    pub fn mu_at(&self, p: &Vec3) -> Result<Sym3> {
        let mu = self.raw_mu_at(p)?;
        if mu.max_abs() == 0.0 {
            return Ok(mu);
        }
        let g = self.metric_at(p)?;
        let gi = g.inverse().ok_or_else(|| GlueError::Consistency("degenerate spliced metric".into()))?;
        Ok(mu.trace_free(&g, &gi))
    }

    /// `eps y F(r)`.
    pub fn rho_at(&self, p: &Vec3) -> f64 {
        self.config.epsilon * p[0] * self.f.value(radius(p))
    }

    /// Which seed region a neck point belongs to: the first chart for `r >= 1`.
    pub fn chart_of(p: &Vec3) -> usize {
        if radius(p) >= 1.0 {
            0
        } else {
            1
        }
    }

    /// Background-chart point and the map data (Jacobian from neck to chart
    /// coordinates is `eps * J`) for a neck point.
    pub fn chart_point(&self, p: &Vec3) -> Result<(usize, Vec3, Mat3)> {
        let eps = self.config.epsilon;
        if Self::chart_of(p) == 0 {
            Ok((0, scaled(p, eps), IDENTITY3))
        } else {
            let (q, j) = inversion(p)?;
            Ok((1, scaled(&q, eps), j))
        }
    }
}

/// Spliced data sampled on the neck grid.
#[derive(Clone, Debug)]
pub struct GluedData {
    pub neck: NeckDomain,
    pub metric: MetricField,
    /// `y^2 g_eps - delta`.
    pub metric_error: SymTensorField,
    pub rho: ScalarField,
    pub mu: SymTensorField,
    pub b: f64,
}

pub fn spliced_metric(neck: &NeckDomain, seeds: &SeedData) -> Result<(MetricField, SymTensorField)> {
    let sp = Splicer::new(&neck.config, seeds)?;
    let grid = *neck.grid();
    let g = Field::try_from_fn(grid, Covariance::Sym2, |_, p| sp.metric_at(&p))?;
    let metric = MetricField::new(g).map_err(|e| match e {
        GlueError::NotPositiveDefinite { node } => GlueError::Consistency(format!(
            "spliced metric not positive definite at node {node}; epsilon too large for these seeds"
        )),
        e => e,
    })?;
    let k = metric.map(Covariance::Sym2, |n, g| {
        let y = grid.point(n)[0];
        g.scale(y * y).sub(&Sym3::IDENTITY)
    });
    Ok((metric, k))
}

pub fn spliced_defining_function(neck: &NeckDomain) -> Result<ScalarField> {
    let f = build_f(neck.config.b())?;
    let eps = neck.config.epsilon;
    Ok(Field::from_fn(*neck.grid(), Covariance::Scalar, |_, p| eps * p[0] * f.value(radius(&p))))
}

pub fn spliced_mu(neck: &NeckDomain, seeds: &SeedData) -> Result<SymTensorField> {
    let sp = Splicer::new(&neck.config, seeds)?;
    Field::try_from_fn(*neck.grid(), Covariance::Sym2, |_, p| sp.mu_at(&p))
}

pub fn splice(config: &SpliceConfig, seeds: &SeedData) -> Result<GluedData> {
    if config.symmetric && !seeds.identical {
        return Err(GlueError::Parameter("reflection closure needs two copies of the same seed".into()));
    }
    let neck = build_neck_domain(config)?;
    let (metric, metric_error) = spliced_metric(&neck, seeds)?;
    let rho = spliced_defining_function(&neck)?;
    let mu = spliced_mu(&neck, seeds)?;
    Ok(GluedData { b: config.b(), neck, metric, metric_error, rho, mu })
}

/// Result of the near-boundary defining-function test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefiningFunctionReport {
    /// Smallest `C` with `| |d rho|^2 / rho^2 - 1 | <= (C / eps) rho` on the band.
    pub constant: f64,
    pub max_deviation: f64,
    pub band_nodes: usize,
}

/// Evaluate `| |d rho|^2_g / rho^2 - 1 |` on nodes with `y <= y_band` selected by `mask`.
pub fn defining_function_estimate_check(
    ctx: &OperatorContext,
    rho: &ScalarField,
    epsilon: f64,
    y_band: f64,
    mask: Option<&[bool]>,
) -> Result<DefiningFunctionReport> {
    let grid = *ctx.grid();
    rho.check_grid(&grid)?;
    let mut rep = DefiningFunctionReport { constant: 0.0, max_deviation: 0.0, band_nodes: 0 };
    for n in 0..grid.len() {
        if mask.is_some_and(|m| !m[n]) {
            continue;
        }
        let i = grid.ijk(n);
        if grid.y_at(i[0]) > y_band * (1.0 + 1e-12) {
            continue;
        }
        let d = fd::gradient(&grid, rho.data(), i, -1);
        let r = *rho.at(n);
        let dev = (ctx.inverse(n).mul_vec(&d).iter().zip(&d).map(|(a, b)| a * b).sum::<f64>() / (r * r) - 1.0).abs();
        rep.max_deviation = rep.max_deviation.max(dev);
        rep.constant = rep.constant.max(epsilon * dev / r);
        rep.band_nodes += 1;
    }
    Ok(rep)
}

/// Largest `|k_ab|` over nodes with `c <= r <= 1/c`.
pub fn metric_error_on_annulus(glued: &GluedData, c: f64) -> f64 {
    let grid = glued.neck.grid();
    let mut m = 0.0f64;
    for n in 0..grid.len() {
        if glued.neck.domain.role(n) == NodeRole::Unused {
            continue;
        }
        let r = radius(&grid.point(n));
        if r >= c && r <= 1.0 / c {
            m = m.max(glued.metric_error.at(n).max_abs());
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_validation() {
        let c = SpliceConfig { symmetric: false, ..SpliceConfig::new(0.1, 0.25) };
        assert_eq!(c.r_in(), 0.1);
        assert_eq!(c.r_out(), 10.0);
        assert!(c.validate().is_ok());
        assert!(SpliceConfig::new(0.1, 0.5).validate().is_err());
        assert!(SpliceConfig { r_out: Some(1.2), ..SpliceConfig::new(0.1, 0.1) }.validate().is_err());
        assert!(SpliceConfig { r_in: Some(0.05), ..SpliceConfig::new(0.1, 0.1) }.validate().is_err());
    }

    #[test]
    fn neck_box_extent() {
        let c = SpliceConfig { symmetric: false, r_in: Some(0.1), r_out: Some(10.0), ..SpliceConfig::new(0.1, 0.25) };
        let neck = build_neck_domain(&c).unwrap();
        assert!((neck.grid().x_extent() - 10.0).abs() < 1e-12);
        assert!((neck.grid().y_max() - 10.0).abs() < 0.25);
    }

    #[test]
    fn hyperbolic_splice_is_hyperbolic() {
        let c = SpliceConfig { r_out: Some(3.0), ..SpliceConfig::new(0.2, 0.25) };
        let glued = splice(&c, &SeedData::exact_hyperbolic()).unwrap();
        assert!(glued.metric_error.max_abs(None) < 1e-14);
        assert_eq!(glued.mu.max_abs(None), 0.0);
    }
}
