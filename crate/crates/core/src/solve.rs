//! York projection and the Lichnerowicz fixed-point iteration on a [`SolveDomain`].

use crate::boundary::{BoundaryPolicy, NodeRole, SolveDomain};
use crate::error::{GlueError, Result};
use crate::grid::{Covariance, Field, ScalarField, SymTensorField, VectorField};
use crate::krylov::{self, KrylovReport, KrylovSettings, LinearOperator};
use crate::linalg::{Sym3, Vec3};
use crate::operators::{LichnerowiczTerms, OperatorContext};
use crate::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveSettings {
    pub krylov: KrylovSettings,
    /// Stop when `max |eta_{n+1} - eta_n| <= picard_tolerance`.
    pub picard_tolerance: f64,
    pub picard_max_steps: usize,
    pub policy: BoundaryPolicy,
}

impl Default for SolveSettings {
    fn default() -> Self {
        SolveSettings {
            krylov: KrylovSettings::default(),
            picard_tolerance: 1e-10,
            picard_max_steps: 40,
            policy: BoundaryPolicy::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub linear: Vec<KrylovReport>,
    /// `max |eta_{n+1} - eta_n|` per Picard step.
    pub increments: Vec<f64>,
    /// Ratio of successive increments, recorded while the previous one is
    /// well above the Picard tolerance.
    pub contraction_factors: Vec<f64>,
    /// `sup |solution| / sup |rhs|` of the first linear solve.
    pub inverse_norm_estimate: f64,
}

impl SolveDiagnostics {
    pub fn linear_iterations(&self) -> usize {
        self.linear.iter().map(|r| r.iterations).sum()
    }

    pub fn max_contraction(&self) -> f64 {
        self.contraction_factors.iter().copied().fold(0.0, f64::max)
    }
}

/// The two discretized linear operators.
#[derive(Clone, Copy, Debug)]
pub enum EllipticOperator<'a> {
    /// `X -> -(div D X)^sharp`, three unknowns per node.
    VectorLaplacian,
    /// `eta -> Lap eta - f eta`.
    LinearizedLichnerowicz { f: &'a [f64] },
}

impl EllipticOperator<'_> {
    fn components(&self) -> usize {
        match self {
            EllipticOperator::VectorLaplacian => 3,
            EllipticOperator::LinearizedLichnerowicz { .. } => 1,
        }
    }
}

/// Grid system with closure rows: Dirichlet and unused rows are the identity,
/// ghost rows tie a node to the reflected trilinear stencil.
struct GridSystem<'a> {
    ctx: &'a OperatorContext,
    domain: &'a SolveDomain,
    op: EllipticOperator<'a>,
    /// Nodes where the first-order vector stencil is evaluated.
    needs_dx: Vec<bool>,
}

impl<'a> GridSystem<'a> {
    fn new(ctx: &'a OperatorContext, domain: &'a SolveDomain, op: EllipticOperator<'a>) -> Result<Self> {
        let grid = domain.grid();
        if ctx.grid() != grid {
            return Err(GlueError::GridMismatch("operator context and solve domain differ".into()));
        }
        if let EllipticOperator::LinearizedLichnerowicz { f } = op {
            if f.len() != grid.len() {
                return Err(GlueError::GridMismatch("coefficient length".into()));
            }
        }
        let mut needs_dx = vec![false; grid.len()];
        if matches!(op, EllipticOperator::VectorLaplacian) {
            for &n in domain.active() {
                needs_dx[n] = true;
                let i = grid.ijk(n);
                for a in 0..3 {
                    for s in [-1isize, 1] {
                        let mut o = [0isize; 3];
                        o[a] = s;
                        if let Some(m) = grid.offset(i, o) {
                            needs_dx[m] = true;
                        }
                    }
                }
            }
        }
        Ok(GridSystem { ctx, domain, op, needs_dx })
    }
}

impl LinearOperator for GridSystem<'_> {
    fn len(&self) -> usize {
        self.domain.grid().len() * self.op.components()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let k = self.op.components();
        y.copy_from_slice(x);
        match self.op {
            EllipticOperator::LinearizedLichnerowicz { f } => {
                for &n in self.domain.active() {
                    y[n] = self.ctx.laplacian_at(x, n, 0) - f[n] * x[n];
                }
            }
            EllipticOperator::VectorLaplacian => {
                let xs: Vec<Vec3> = x.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
                let dx: Vec<Sym3> = (0..xs.len())
                    .map(|n| if self.needs_dx[n] { self.ctx.conformal_killing_at(&xs, n) } else { Sym3::ZERO })
                    .collect();
                for &n in self.domain.active() {
                    let v = self.ctx.sharp(&self.ctx.divergence_at(&dx, n), n);
                    for c in 0..3 {
                        y[3 * n + c] = -v[c];
                    }
                }
            }
        }
        for g in self.domain.ghosts() {
            let mut acc = [0.0; 3];
            for (m, w) in g.stencil.iter() {
                for c in 0..k {
                    acc[c] += w * x[k * m + c];
                }
            }
            if k == 3 {
                acc = crate::linalg::mat_vec(&g.jacobian, &acc);
            }
            for c in 0..k {
                y[k * g.node + c] = x[k * g.node + c] - acc[c];
            }
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let k = self.op.components();
        let mut d = vec![1.0; self.len()];
        let h2 = self.domain.grid().h * self.domain.grid().h;
        for &n in self.domain.active() {
            match self.op {
                EllipticOperator::LinearizedLichnerowicz { f } => d[n] = self.ctx.laplacian_diagonal(n) - f[n],
                EllipticOperator::VectorLaplacian => {
                    let gi = self.ctx.inverse(n);
                    let tr = gi.get(0, 0) + gi.get(1, 1) + gi.get(2, 2);
                    for a in 0..3 {
                        d[k * n + a] = (0.5 * tr + gi.get(a, a) / 6.0) / (2.0 * h2) + 1.0;
                    }
                }
            }
        }
        d
    }
}

/// Solve `op x = rhs` on the active rows, with `rhs` holding the boundary
/// values on Dirichlet rows and ignored on ghost and unused rows.
///
/// `guess` is the starting iterate and `weights` scale rows in the stopping rule.
pub fn assemble_and_solve(
    ctx: &OperatorContext,
    domain: &SolveDomain,
    op: EllipticOperator<'_>,
    rhs: &[f64],
    guess: Option<&[f64]>,
    weights: Option<&[f64]>,
    settings: &KrylovSettings,
) -> Result<(Vec<f64>, KrylovReport)> {
    let sys = GridSystem::new(ctx, domain, op)?;
    let n = sys.len();
    let k = op.components();
    if rhs.len() != n || guess.is_some_and(|g| g.len() != n) || weights.is_some_and(|w| w.len() != n) {
        return Err(GlueError::GridMismatch(format!("system of size {n} given mismatched vectors")));
    }
    let mut b = rhs.to_vec();
    for (node, role) in domain.roles().iter().enumerate() {
        if matches!(role, NodeRole::Ghost | NodeRole::Unused) {
            b[k * node..k * node + k].iter_mut().for_each(|v| *v = 0.0);
        }
    }
    let mut x = guess.map_or_else(|| vec![0.0; n], |g| g.to_vec());
    let report = krylov::solve(&sys, &b, &mut x, weights, settings)?;
    Ok((x, report))
}

/// Output of [`york_project`].
#[derive(Clone, Debug)]
pub struct YorkSolution {
    pub x: VectorField,
    pub nu: SymTensorField,
    pub diagnostics: SolveDiagnostics,
    /// `sup rho^-1 |div mu|_g` over active nodes.
    pub div_mu: f64,
    /// Same for `nu`.
    pub div_nu: f64,
    /// `sup |tr_g nu|` over active nodes.
    pub trace: f64,
}

pub fn weighted_one_form_sup(ctx: &OperatorContext, domain: &SolveDomain, w: &[Vec3], rho: &ScalarField) -> f64 {
    domain
        .active()
        .iter()
        .map(|&n| {
            let v = ctx.sharp(&w[n], n);
            crate::linalg::dot3(&v, &w[n]).max(0.0).sqrt() / rho.at(n)
        })
        .fold(0.0, f64::max)
}

/// Divergence of `s` on active nodes, zero elsewhere.
pub fn active_divergence(ctx: &OperatorContext, domain: &SolveDomain, s: &SymTensorField) -> Vec<Vec3> {
    let mut out = vec![[0.0; 3]; s.data().len()];
    for &n in domain.active() {
        out[n] = ctx.divergence_at(s.data(), n);
    }
    out
}

/// `sup rho^-1 |div s|_g` over active nodes.
pub fn weighted_divergence_norm(ctx: &OperatorContext, domain: &SolveDomain, s: &SymTensorField, rho: &ScalarField) -> f64 {
    weighted_one_form_sup(ctx, domain, &active_divergence(ctx, domain, s), rho)
}

/// Solve `L X = (div mu)^sharp` with `X = 0` on the closure and set `nu = mu + D X`.
pub fn york_project(
    ctx: &OperatorContext,
    domain: &SolveDomain,
    mu: &SymTensorField,
    rho: &ScalarField,
    settings: &SolveSettings,
) -> Result<YorkSolution> {
    let grid = *domain.grid();
    mu.check_grid(&grid)?;
    rho.check_grid(&grid)?;
    let div_mu = active_divergence(ctx, domain, mu);
    let div_mu_norm = weighted_one_form_sup(ctx, domain, &div_mu, rho);
    let mut rhs = vec![0.0; 3 * grid.len()];
    for &n in domain.active() {
        let v = ctx.sharp(&div_mu[n], n);
        rhs[3 * n..3 * n + 3].copy_from_slice(&v);
    }
    let weights: Vec<f64> = (0..grid.len())
        .flat_map(|n| {
            let w = 1.0 / (rho.at(n) * grid.point(n)[0]);
            [w, w, w]
        })
        .collect();
    let mut diagnostics = SolveDiagnostics::default();
    let x = if div_mu_norm == 0.0 {
        vec![[0.0; 3]; grid.len()]
    } else {
        let (flat, report) = assemble_and_solve(
            ctx,
            domain,
            EllipticOperator::VectorLaplacian,
            &rhs,
            None,
            Some(&weights),
            &settings.krylov,
        )?;
        let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        diagnostics.inverse_norm_estimate = sup(&flat) / sup(&rhs);
        diagnostics.linear.push(report);
        flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect()
    };
    let x = Field::from_vec(grid, Covariance::Vector, x)?;
    let nu = Field::from_fn(grid, Covariance::Sym2, |n, _| {
        if domain.role(n) == NodeRole::Unused {
            *mu.at(n)
        } else {
            mu.at(n).add(&ctx.conformal_killing_at(x.data(), n))
        }
    });
    let div_nu = weighted_divergence_norm(ctx, domain, &nu, rho);
    let trace = domain.active().iter().map(|&n| ctx.inverse(n).trace_with(nu.at(n)).abs()).fold(0.0, f64::max);
    Ok(YorkSolution { x, nu, diagnostics, div_mu: div_mu_norm, div_nu, trace })
}

/// `Q(eta)` at one node given `|nu|^2_g`.
#[inline]
pub fn quadratic_remainder_at(nu_sq: f64, eta: f64) -> Result<f64> {
    let u = 1.0 + eta;
    if !(u > 0.0) {
        return Err(GlueError::Domain(format!("1 + eta = {u} is not positive")));
    }
    let u2 = u * u;
    let u5 = u2 * u2 * u;
    let u7 = u5 * u2;
    Ok(nu_sq / 8.0 * (1.0 / u7 - 1.0 + 7.0 * eta) - 0.75 * (u5 - 1.0 - 5.0 * eta))
}

/// Nonlinear remainder of the Lichnerowicz operator about `u = 1`.
pub fn quadratic_remainder(ctx: &OperatorContext, nu: &SymTensorField, eta: &ScalarField) -> Result<ScalarField> {
    let grid = *ctx.grid();
    nu.check_grid(&grid)?;
    eta.check_grid(&grid)?;
    Field::try_from_fn(grid, Covariance::Scalar, |n, _| {
        quadratic_remainder_at(nu.at(n).norm_sq(ctx.inverse(n)), *eta.at(n))
    })
}

/// Output of [`lichnerowicz_solve`].
#[derive(Clone, Debug)]
pub struct LichnerowiczSolution {
    pub psi: ScalarField,
    pub terms: LichnerowiczTerms,
    pub diagnostics: SolveDiagnostics,
    /// `sup |L(1)|` over active nodes.
    pub residual_at_one: f64,
    /// `sup |L(psi)|` over active nodes.
    pub residual: f64,
    /// `min f` over active nodes.
    pub f_min: f64,
    pub steps: usize,
}

/// Sup of a scalar array over active nodes.
pub fn active_sup(domain: &SolveDomain, v: &[f64]) -> f64 {
    domain.active().iter().map(|&n| v[n].abs()).fold(0.0, f64::max)
}

/// Picard iteration `eta <- -P^{-1}(L(1) + Q(eta))` from `eta = 0`, with
/// `eta = 0` on Dirichlet rows.
pub fn lichnerowicz_solve(
    ctx: &OperatorContext,
    domain: &SolveDomain,
    terms: LichnerowiczTerms,
    rho: &ScalarField,
    settings: &SolveSettings,
) -> Result<LichnerowiczSolution> {
    let grid = *domain.grid();
    rho.check_grid(&grid)?;
    let f = terms.f.data();
    let f_min = domain.active().iter().map(|&n| f[n]).fold(f64::INFINITY, f64::min);
    if !(f_min > 0.0) {
        return Err(GlueError::Domain(format!("linearized coefficient f has minimum {f_min}")));
    }
    let one = Field::from_fn(grid, Covariance::Scalar, |_, _| 1.0);
    let l_one = terms.apply(ctx, &one)?;
    let residual_at_one = active_sup(domain, l_one.data());
    let nu_sq = terms.nu_sq.data();
    let weights: Vec<f64> = rho.data().iter().map(|r| 1.0 / r).collect();
    let mut eta = vec![0.0; grid.len()];
    let mut diagnostics = SolveDiagnostics::default();
    let mut steps = 0;
    let mut converged = false;
    for step in 1..=settings.picard_max_steps {
        steps = step;
        let mut rhs = vec![0.0; grid.len()];
        for &n in domain.active() {
            rhs[n] = -(l_one.data()[n] + quadratic_remainder_at(nu_sq[n], eta[n])?);
        }
        let (next, report) = assemble_and_solve(
            ctx,
            domain,
            EllipticOperator::LinearizedLichnerowicz { f },
            &rhs,
            Some(&eta),
            Some(&weights),
            &settings.krylov,
        )
        .map_err(|e| GlueError::Picard { step, reason: format!("{e}") })?;
        if step == 1 {
            let s = active_sup(domain, &rhs);
            diagnostics.inverse_norm_estimate =
                if s > 0.0 { next.iter().fold(0.0f64, |m, v| m.max(v.abs())) / s } else { 0.0 };
        }
        diagnostics.linear.push(report);
        let incr = next.iter().zip(&eta).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if let Some(&prev) = diagnostics.increments.last() {
            if prev > 1e3 * settings.picard_tolerance {
                diagnostics.contraction_factors.push(incr / prev);
            }
            if !incr.is_finite() || incr > 1e3 * prev.max(settings.picard_tolerance) {
                return Err(GlueError::Picard { step, reason: format!("iteration diverges, increment {incr:.3e}") });
            }
        }
        if let Some(n) = next.iter().position(|v| !(1.0 + v > 0.0)) {
            return Err(GlueError::Picard { step, reason: format!("conformal factor not positive at node {n}") });
        }
        diagnostics.increments.push(incr);
        eta = next;
        if incr <= settings.picard_tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(GlueError::Picard {
            step: steps,
            reason: format!("no convergence, last increment {:.3e}", diagnostics.increments.last().unwrap_or(&f64::NAN)),
        });
    }
    let psi = Field::from_vec(grid, Covariance::Scalar, eta.iter().map(|e| 1.0 + e).collect())?;
    let residual = active_sup(domain, terms.apply(ctx, &psi)?.data());
    Ok(LichnerowiczSolution { psi, terms, diagnostics, residual_at_one, residual, f_min, steps })
}
