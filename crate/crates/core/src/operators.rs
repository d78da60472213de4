//! Discrete differential operators for a metric sampled on a chart grid.

use crate::error::{GlueError, Result};
use crate::fd;
use crate::grid::{ChartGrid, Covariance, Field, MetricField, OneFormField, ScalarField, SymTensorField, VectorField};
use crate::linalg::{dot3, NodeValue, Sym3, Vec3};
use crate::prelude::*;
use crate::cutoff::{build_chi, chi_argument};
use crate::geometry::inversion;
use crate::splice::{SeedData, SpliceConfig};

/// Christoffel symbols `Gamma^a_{bc}`, indexed `[a].get(b, c)`.
pub type Christoffel = [Sym3; 3];

/// Metric with cached inverse and connection on every node of its grid.
#[derive(Clone, Debug)]
pub struct OperatorContext {
    grid: ChartGrid,
    g: Vec<Sym3>,
    ginv: Vec<Sym3>,
    gamma: Vec<Christoffel>,
    /// `g^{bc} Gamma^a_{bc}`.
    gamma_contracted: Vec<Vec3>,
}

/// `Gamma_{d bc} = (d_b g_dc + d_c g_db - d_d g_bc) / 2`.
#[inline]
fn lowered_christoffel(dg: &[Sym3; 3]) -> [Sym3; 3] {
    let mut low = [Sym3::ZERO; 3];
    for (d, l) in low.iter_mut().enumerate() {
        *l = Sym3::from_fn(|b, c| 0.5 * (dg[b].get(d, c) + dg[c].get(d, b) - dg[d].get(b, c)));
    }
    low
}

#[inline]
fn raise_first(ginv: &Sym3, low: &[Sym3; 3]) -> Christoffel {
    let mut up = [Sym3::ZERO; 3];
    for (a, u) in up.iter_mut().enumerate() {
        for (d, l) in low.iter().enumerate() {
            let c = ginv.get(a, d);
            if c != 0.0 {
                *u = u.add(&l.scale(c));
            }
        }
    }
    up
}

impl OperatorContext {
    pub fn new(metric: &MetricField) -> Result<Self> {
        let grid = *metric.grid();
        let g = metric.data().to_vec();
        let mut ginv = Vec::with_capacity(grid.len());
        for (n, m) in g.iter().enumerate() {
            ginv.push(m.inverse().ok_or(GlueError::NotPositiveDefinite { node: n })?);
        }
        let mut gamma = Vec::with_capacity(grid.len());
        let mut gamma_contracted = Vec::with_capacity(grid.len());
        for n in 0..grid.len() {
            let dg = fd::gradient(&grid, &g, grid.ijk(n), 2);
            let up = raise_first(&ginv[n], &lowered_christoffel(&dg));
            gamma_contracted.push([ginv[n].dot(&up[0]), ginv[n].dot(&up[1]), ginv[n].dot(&up[2])]);
            gamma.push(up);
        }
        Ok(OperatorContext { grid, g, ginv, gamma, gamma_contracted })
    }

    #[inline]
    pub fn grid(&self) -> &ChartGrid {
        &self.grid
    }

    #[inline]
    pub fn metric(&self, n: usize) -> &Sym3 {
        &self.g[n]
    }

    #[inline]
    pub fn inverse(&self, n: usize) -> &Sym3 {
        &self.ginv[n]
    }

    #[inline]
    pub fn christoffel(&self, n: usize) -> &Christoffel {
        &self.gamma[n]
    }

    pub fn metric_field(&self) -> Result<MetricField> {
        MetricField::new(Field::from_vec(self.grid, Covariance::Sym2, self.g.clone())?)
    }

    fn check<T: NodeValue>(&self, f: &Field<T>) -> Result<()> {
        f.check_grid(&self.grid)
    }

    /// Scalar curvature at node `n` from first and second differences of `g`.
    pub fn scalar_curvature_at(&self, n: usize) -> f64 {
        let i = self.grid.ijk(n);
        let (dg, ddg) = fd::gradient_hessian(&self.grid, &self.g, i, 2);
        let gi = &self.ginv[n];
        let gam = &self.gamma[n];
        let low = lowered_christoffel(&dg);
        // d_e g^{ad} = -g^{af} d_e g_fh g^{hd}
        let dginv: [Sym3; 3] = core::array::from_fn(|e| dg[e].raise(gi).scale(-1.0));
        // dgam[e][a].get(b, c) = d_e Gamma^a_bc
        let mut dgam = [[Sym3::ZERO; 3]; 3];
        for e in 0..3 {
            let dlow: [Sym3; 3] = core::array::from_fn(|d| {
                Sym3::from_fn(|b, c| 0.5 * (ddg[e][b].get(d, c) + ddg[e][c].get(d, b) - ddg[e][d].get(b, c)))
            });
            for a in 0..3 {
                let mut acc = Sym3::ZERO;
                for d in 0..3 {
                    acc = acc.add(&low[d].scale(dginv[e].get(a, d)));
                    acc = acc.add(&dlow[d].scale(gi.get(a, d)));
                }
                dgam[e][a] = acc;
            }
        }
        // R = g^{bd} (d_a G^a_bd - d_d G^a_ab + G^a_ae G^e_bd - G^a_de G^e_ab)
        let mut r = 0.0;
        let trace_gam: Vec3 = core::array::from_fn(|e| (0..3).map(|a| gam[a].get(a, e)).sum());
        for b in 0..3 {
            for d in 0..3 {
                let gbd = gi.get(b, d);
                if gbd == 0.0 {
                    continue;
                }
                let mut ric = 0.0;
                for a in 0..3 {
                    ric += dgam[a][a].get(b, d) - dgam[d][a].get(a, b);
                }
                for e in 0..3 {
                    ric += trace_gam[e] * gam[e].get(b, d);
                    for a in 0..3 {
                        ric -= gam[a].get(d, e) * gam[e].get(a, b);
                    }
                }
                r += gbd * ric;
            }
        }
        r
    }

    /// `g^{ab} d_a d_b u - g^{bc} Gamma^a_bc d_a u` at node `n`; `u` differenced as `y^w u`.
    #[inline]
    pub fn laplacian_at(&self, u: &[f64], n: usize, w: i32) -> f64 {
        let (d, dd) = fd::gradient_hessian(&self.grid, u, self.grid.ijk(n), w);
        let gi = &self.ginv[n];
        let mut s = gi.get(0, 0) * dd[0][0] + gi.get(1, 1) * dd[1][1] + gi.get(2, 2) * dd[2][2];
        s += 2.0 * (gi.get(0, 1) * dd[0][1] + gi.get(0, 2) * dd[0][2] + gi.get(1, 2) * dd[1][2]);
        s - dot3(&self.gamma_contracted[n], &d)
    }

    /// Diagonal entry of the discrete Laplacian at an interior node.
    #[inline]
    pub fn laplacian_diagonal(&self, n: usize) -> f64 {
        let gi = &self.ginv[n];
        -2.0 * (gi.get(0, 0) + gi.get(1, 1) + gi.get(2, 2)) / (self.grid.h * self.grid.h)
    }

    /// `(D X)_cd = (nabla_c X_d + nabla_d X_c)/2 - (div X) g_cd / 3` at node `n`.
    #[inline]
    pub fn conformal_killing_at(&self, x: &[Vec3], n: usize) -> Sym3 {
        let d = fd::gradient(&self.grid, x, self.grid.ijk(n), -1);
        let gam = &self.gamma[n];
        let xv = &x[n];
        // cov[c][e] = nabla_c X^e
        let mut cov = [[0.0; 3]; 3];
        for c in 0..3 {
            for e in 0..3 {
                cov[c][e] = d[c][e] + gam[e].get(c, 0) * xv[0] + gam[e].get(c, 1) * xv[1] + gam[e].get(c, 2) * xv[2];
            }
        }
        let div = cov[0][0] + cov[1][1] + cov[2][2];
        let g = &self.g[n];
        // low[c][d] = nabla_c X_d
        let mut low = [[0.0; 3]; 3];
        for c in 0..3 {
            for dd in 0..3 {
                low[c][dd] = g.get(dd, 0) * cov[c][0] + g.get(dd, 1) * cov[c][1] + g.get(dd, 2) * cov[c][2];
            }
        }
        Sym3::from_fn(|c, dd| 0.5 * (low[c][dd] + low[dd][c]) - div * g.get(c, dd) / 3.0)
    }

    /// `(div S)_b = g^{ac} nabla_a S_cb` at node `n`.
    #[inline]
    pub fn divergence_at(&self, s: &[Sym3], n: usize) -> Vec3 {
        let d = fd::gradient(&self.grid, s, self.grid.ijk(n), 2);
        let gi = &self.ginv[n];
        let gam = &self.gamma[n];
        let gc = &self.gamma_contracted[n];
        let sv = &s[n];
        // mixed[a][e] = g^{ac} S_ce
        let mut mixed = [[0.0; 3]; 3];
        for a in 0..3 {
            for e in 0..3 {
                mixed[a][e] = gi.get(a, 0) * sv.get(0, e) + gi.get(a, 1) * sv.get(1, e) + gi.get(a, 2) * sv.get(2, e);
            }
        }
        core::array::from_fn(|b| {
            let mut v = 0.0;
            for a in 0..3 {
                for c in 0..3 {
                    v += gi.get(a, c) * d[a].get(c, b);
                }
            }
            for e in 0..3 {
                v -= gc[e] * sv.get(e, b);
                for a in 0..3 {
                    v -= gam[e].get(a, b) * mixed[a][e];
                }
            }
            v
        })
    }

    /// Index raising of a one-form at node `n`.
    #[inline]
    pub fn sharp(&self, w: &Vec3, n: usize) -> Vec3 {
        self.ginv[n].mul_vec(w)
    }
}

/// Christoffel symbols and scalar curvature on every node.
pub struct Curvature {
    pub christoffel: Vec<Christoffel>,
    pub scalar: ScalarField,
}

pub fn curvature(metric: &MetricField) -> Result<Curvature> {
    let ctx = OperatorContext::new(metric)?;
    let scalar = scalar_curvature(&ctx);
    Ok(Curvature { christoffel: ctx.gamma.clone(), scalar })
}

pub fn scalar_curvature(ctx: &OperatorContext) -> ScalarField {
    Field::from_fn(ctx.grid, Covariance::Scalar, |n, _| ctx.scalar_curvature_at(n))
}

pub fn divergence_and_trace(ctx: &OperatorContext, s: &SymTensorField) -> Result<(OneFormField, ScalarField)> {
    ctx.check(s)?;
    let div = Field::from_fn(ctx.grid, Covariance::OneForm, |n, _| ctx.divergence_at(s.data(), n));
    let tr = Field::from_fn(ctx.grid, Covariance::Scalar, |n, _| ctx.ginv[n].trace_with(s.at(n)));
    Ok((div, tr))
}

pub fn conformal_killing_apply(ctx: &OperatorContext, x: &VectorField) -> Result<SymTensorField> {
    ctx.check(x)?;
    Ok(Field::from_fn(ctx.grid, Covariance::Sym2, |n, _| ctx.conformal_killing_at(x.data(), n)))
}

/// `L X = -(div D X)^sharp`, composed from the two first-order stencils.
pub fn vector_laplacian_apply(ctx: &OperatorContext, x: &VectorField) -> Result<VectorField> {
    let dx = conformal_killing_apply(ctx, x)?;
    Ok(Field::from_fn(ctx.grid, Covariance::Vector, |n, _| {
        let w = ctx.divergence_at(dx.data(), n);
        let v = ctx.sharp(&w, n);
        [-v[0], -v[1], -v[2]]
    }))
}

pub fn laplacian(ctx: &OperatorContext, u: &ScalarField, w: i32) -> Result<ScalarField> {
    ctx.check(u)?;
    Ok(Field::from_fn(ctx.grid, Covariance::Scalar, |n, _| ctx.laplacian_at(u.data(), n, w)))
}

/// Momentum `div K - d tr K` and Hamiltonian `R - |K|^2 + (tr K)^2`.
pub fn constraint_residuals(
    ctx: &OperatorContext,
    k: &SymTensorField,
    scalar_curv: &ScalarField,
) -> Result<(OneFormField, ScalarField)> {
    ctx.check(k)?;
    ctx.check(scalar_curv)?;
    let (div, tr) = divergence_and_trace(ctx, k)?;
    let mom = Field::from_fn(ctx.grid, Covariance::OneForm, |n, _| {
        let d = fd::gradient(&ctx.grid, tr.data(), ctx.grid.ijk(n), 0);
        let v = div.at(n);
        [v[0] - d[0], v[1] - d[1], v[2] - d[2]]
    });
    let ham = Field::from_fn(ctx.grid, Covariance::Scalar, |n, _| {
        let t = *tr.at(n);
        scalar_curv.at(n) - k.at(n).norm_sq(&ctx.ginv[n]) + t * t
    });
    Ok((mom, ham))
}

/// Nodewise coefficients of the Lichnerowicz operator for fixed `(g, nu)`.
#[derive(Clone, Debug)]
pub struct LichnerowiczTerms {
    pub scalar_curvature: ScalarField,
    pub nu_sq: ScalarField,
    /// `f = (R + 7|nu|^2 + 30) / 8`.
    pub f: ScalarField,
}

impl LichnerowiczTerms {
    pub fn new(ctx: &OperatorContext, scalar_curv: ScalarField, nu: &SymTensorField) -> Result<Self> {
        ctx.check(nu)?;
        ctx.check(&scalar_curv)?;
        let nu_sq = Field::from_fn(ctx.grid, Covariance::Scalar, |n, _| nu.at(n).norm_sq(&ctx.ginv[n]));
        let f = Field::from_fn(ctx.grid, Covariance::Scalar, |n, _| {
            (scalar_curv.at(n) + 7.0 * nu_sq.at(n) + 30.0) / 8.0
        });
        Ok(LichnerowiczTerms { scalar_curvature: scalar_curv, nu_sq, f })
    }

    /// Algebraic part `-R u/8 + |nu|^2 u^-7 / 8 - 3 u^5 / 4` at node `n`.
    #[inline]
    pub fn source_at(&self, n: usize, u: f64) -> f64 {
        let u2 = u * u;
        let u4 = u2 * u2;
        -self.scalar_curvature.at(n) * u / 8.0 + self.nu_sq.at(n) / (8.0 * u4 * u2 * u) - 0.75 * u4 * u
    }

    /// `L(u) = Lap u + source(u)`.
    pub fn apply(&self, ctx: &OperatorContext, u: &ScalarField) -> Result<ScalarField> {
        ctx.check(u)?;
        if let Some(n) = u.data().iter().position(|v| !(*v > 0.0)) {
            return Err(GlueError::Domain(format!("conformal factor not positive at node {n}")));
        }
        Ok(Field::from_fn(ctx.grid, Covariance::Scalar, |n, _| {
            ctx.laplacian_at(u.data(), n, 0) + self.source_at(n, *u.at(n))
        }))
    }

    /// `P u = Lap u - f u`.
    pub fn apply_linearized(&self, ctx: &OperatorContext, u: &ScalarField) -> Result<ScalarField> {
        ctx.check(u)?;
        Ok(Field::from_fn(ctx.grid, Covariance::Scalar, |n, _| {
            ctx.laplacian_at(u.data(), n, 0) - self.f.at(n) * u.at(n)
        }))
    }
}

/// Lichnerowicz operator and its `f` coefficient in one call.
pub fn lichnerowicz_apply(
    ctx: &OperatorContext,
    nu: &SymTensorField,
    u: &ScalarField,
) -> Result<(ScalarField, ScalarField)> {
    let terms = LichnerowiczTerms::new(ctx, scalar_curvature(ctx), nu)?;
    let l = terms.apply(ctx, u)?;
    Ok((l, terms.f))
}

pub fn linearized_lichnerowicz_apply(ctx: &OperatorContext, nu: &SymTensorField, u: &ScalarField) -> Result<ScalarField> {
    let terms = LichnerowiczTerms::new(ctx, scalar_curvature(ctx), nu)?;
    terms.apply_linearized(ctx, u)
}

/// `Delta_g rho` on every node and its maximum over `mask`.
pub fn superharmonicity_check(ctx: &OperatorContext, rho: &ScalarField, mask: Option<&[bool]>) -> Result<(ScalarField, f64)> {
    let lap = laplacian(ctx, rho, -1)?;
    let max = lap
        .data()
        .iter()
        .enumerate()
        .filter(|(n, _)| mask.is_none_or(|m| m[*n]))
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((lap, max))
}

/// Closed-form `div_{g_eps} mu_eps` on the nodes of `grid`.
///
/// Assumes each seed `mu` is divergence free, so only the derivative of the
/// cutoff contributes: `chi'(arg) g^{ac} d_a(arg) mu_cb` in the seed chart,
/// pulled back through the dilation (and the inversion for the second chart).
pub fn spliced_divergence_oracle(config: &SpliceConfig, seeds: &SeedData, grid: &ChartGrid) -> Result<OneFormField> {
    let chi = build_chi();
    let eps = config.epsilon;
    let chart_term = |chart: usize, p: &Vec3| -> Vec3 {
        let q = [eps * p[0], eps * p[1], eps * p[2]];
        let arg = chi_argument(eps, &q);
        if arg <= 2.0 || arg >= 3.0 {
            return [0.0; 3];
        }
        let seed = &seeds.charts[chart];
        let gbar = Sym3::IDENTITY.add(&seed.metric_error(&q));
        let Some(gbar_inv) = gbar.inverse() else {
            return [0.0; 3];
        };
        let mu = seed.mu_bar(&q).scale(1.0 / q[0]);
        let ginv = gbar_inv.scale(q[0] * q[0]);
        let darg = [2.0 * q[0] / (eps * eps), 2.0 * q[1] / eps, 2.0 * q[2] / eps];
        let up = ginv.mul_vec(&darg);
        let d = chi.d1(arg);
        let w = mu.mul_vec(&up);
        [eps * d * w[0], eps * d * w[1], eps * d * w[2]]
    };
    Field::try_from_fn(*grid, Covariance::OneForm, |_, p| {
        let mut v = chart_term(0, &p);
        let (ip, j) = inversion(&p)?;
        let w = chart_term(1, &ip);
        for a in 0..3 {
            v[a] += j[0][a] * w[0] + j[1][a] * w[1] + j[2][a] * w[2];
        }
        Ok(v)
    })
}
