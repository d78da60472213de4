//! Jacobi-preconditioned Krylov solvers for the non-symmetric grid systems.

use crate::error::{GlueError, Result};
use crate::prelude::*;
use serde::{Deserialize, Serialize};

pub trait LinearOperator {
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// Approximate diagonal used for Jacobi preconditioning.
    fn diagonal(&self) -> Vec<f64>;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrylovSettings {
    /// Target for `max|W r| / max|W b|`.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub restart: usize,
}

impl Default for KrylovSettings {
    fn default() -> Self {
        KrylovSettings { tolerance: 1e-10, max_iterations: 4000, restart: 60 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KrylovMethod {
    BiCgStab,
    Gmres,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrylovReport {
    pub method: KrylovMethod,
    pub iterations: usize,
    /// Final weighted relative residual, recomputed from the returned iterate.
    pub residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn weighted_max(v: &[f64], w: Option<&[f64]>) -> f64 {
    match w {
        Some(w) => v.iter().zip(w).fold(0.0, |m, (x, s)| m.max((x * s).abs())),
        None => v.iter().fold(0.0, |m, x| m.max(x.abs())),
    }
}

fn true_residual(op: &dyn LinearOperator, b: &[f64], x: &[f64], r: &mut [f64]) {
    op.apply(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
}

fn inverse_diagonal(op: &dyn LinearOperator) -> Vec<f64> {
    op.diagonal().into_iter().map(|d| if d.abs() > 1e-300 { 1.0 / d } else { 1.0 }).collect()
}

/// Right-preconditioned BiCGSTAB.
pub fn bicgstab(
    op: &dyn LinearOperator,
    b: &[f64],
    x: &mut [f64],
    weights: Option<&[f64]>,
    s: &KrylovSettings,
) -> KrylovReport {
    let n = op.len();
    let minv = inverse_diagonal(op);
    let bnorm = weighted_max(b, weights);
    let mut r = vec![0.0; n];
    let done = |iters: usize, x: &[f64], r: &mut [f64]| {
        true_residual(op, b, x, r);
        let res = if bnorm > 0.0 { weighted_max(r, weights) / bnorm } else { weighted_max(r, weights) };
        KrylovReport { method: KrylovMethod::BiCgStab, iterations: iters, residual: res, converged: res <= s.tolerance }
    };
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return done(0, x, &mut r);
    }
    true_residual(op, b, x, &mut r);
    if weighted_max(&r, weights) <= s.tolerance * bnorm {
        return done(0, x, &mut r);
    }
    let rhat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut phat = vec![0.0; n];
    let mut shat = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut sv = vec![0.0; n];
    for it in 1..=s.max_iterations {
        let rho_new = dot(&rhat, &r);
        if rho_new == 0.0 || !rho_new.is_finite() {
            return done(it, x, &mut r);
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            phat[i] = minv[i] * p[i];
        }
        op.apply(&phat, &mut v);
        let den = dot(&rhat, &v);
        if den == 0.0 || !den.is_finite() {
            return done(it, x, &mut r);
        }
        alpha = rho / den;
        for i in 0..n {
            sv[i] = r[i] - alpha * v[i];
        }
        if weighted_max(&sv, weights) <= 0.5 * s.tolerance * bnorm {
            for i in 0..n {
                x[i] += alpha * phat[i];
            }
            let rep = done(it, x, &mut r);
            if rep.converged {
                return rep;
            }
            continue;
        }
        for i in 0..n {
            shat[i] = minv[i] * sv[i];
        }
        op.apply(&shat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &sv) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * phat[i] + omega * shat[i];
            r[i] = sv[i] - omega * t[i];
        }
        if omega == 0.0 {
            return done(it, x, &mut r);
        }
        if weighted_max(&r, weights) <= 0.5 * s.tolerance * bnorm {
            let rep = done(it, x, &mut r);
            if rep.converged {
                return rep;
            }
        }
    }
    done(s.max_iterations, x, &mut r)
}

/// Restarted GMRES with right Jacobi preconditioning.
pub fn gmres(
    op: &dyn LinearOperator,
    b: &[f64],
    x: &mut [f64],
    weights: Option<&[f64]>,
    s: &KrylovSettings,
) -> KrylovReport {
    let n = op.len();
    let m = s.restart.max(2);
    let minv = inverse_diagonal(op);
    let bnorm = weighted_max(b, weights);
    let mut r = vec![0.0; n];
    let finish = |iters: usize, x: &[f64], r: &mut [f64]| {
        true_residual(op, b, x, r);
        let res = if bnorm > 0.0 { weighted_max(r, weights) / bnorm } else { weighted_max(r, weights) };
        KrylovReport { method: KrylovMethod::Gmres, iterations: iters, residual: res, converged: res <= s.tolerance }
    };
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return finish(0, x, &mut r);
    }
    let mut iters = 0;
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    while iters < s.max_iterations {
        true_residual(op, b, x, &mut r);
        if weighted_max(&r, weights) <= s.tolerance * bnorm {
            break;
        }
        let beta = dot(&r, &r).sqrt();
        basis.clear();
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut hess = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            for i in 0..n {
                z[i] = minv[i] * basis[k][i];
            }
            op.apply(&z, &mut w);
            iters += 1;
            for (j, q) in basis.iter().enumerate() {
                let hjk = dot(&w, q);
                hess[j][k] = hjk;
                for i in 0..n {
                    w[i] -= hjk * q[i];
                }
            }
            let hn = dot(&w, &w).sqrt();
            hess[k + 1][k] = hn;
            for j in 0..k {
                let t = cs[j] * hess[j][k] + sn[j] * hess[j + 1][k];
                hess[j + 1][k] = -sn[j] * hess[j][k] + cs[j] * hess[j + 1][k];
                hess[j][k] = t;
            }
            let den = (hess[k][k] * hess[k][k] + hess[k + 1][k] * hess[k + 1][k]).sqrt();
            if den == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = hess[k][k] / den;
            sn[k] = hess[k + 1][k] / den;
            hess[k][k] = den;
            hess[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            if hn == 0.0 || g[k + 1].abs() <= 1e-3 * s.tolerance * beta || iters >= s.max_iterations {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let acc: f64 = (i + 1..k_used).map(|j| hess[i][j] * y[j]).sum();
            y[i] = (g[i] - acc) / hess[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for i in 0..n {
                x[i] += yj * minv[i] * basis[j][i];
            }
        }
        if k_used == 0 {
            break;
        }
    }
    finish(iters, x, &mut r)
}

/// BiCGSTAB, falling back to restarted GMRES from the best iterate.
pub fn solve(
    op: &dyn LinearOperator,
    b: &[f64],
    x: &mut [f64],
    weights: Option<&[f64]>,
    s: &KrylovSettings,
) -> Result<KrylovReport> {
    let x0 = x.to_vec();
    let first = bicgstab(op, b, x, weights, s);
    if first.converged {
        return Ok(first);
    }
    if !first.residual.is_finite() || first.residual > 1.0 {
        x.copy_from_slice(&x0);
    }
    let mut second = gmres(op, b, x, weights, s);
    second.iterations += first.iterations;
    if second.converged {
        return Ok(second);
    }
    Err(GlueError::NoConvergence { solver: "krylov", iterations: second.iterations, residual: second.residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 1-d convection-diffusion with Dirichlet ends.
    struct Conv {
        n: usize,
    }

    impl LinearOperator for Conv {
        fn len(&self) -> usize {
            self.n
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            let n = self.n;
            for i in 0..n {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < n { x[i + 1] } else { 0.0 };
                y[i] = 2.5 * x[i] - 1.3 * l - 0.7 * r;
            }
        }
        fn diagonal(&self) -> Vec<f64> {
            vec![2.5; self.n]
        }
    }

    #[test]
    fn both_methods_converge() {
        let op = Conv { n: 200 };
        let b: Vec<f64> = (0..200).map(|i| ((i as f64) * 0.1).sin()).collect();
        let s = KrylovSettings::default();
        let mut x = vec![0.0; 200];
        assert!(bicgstab(&op, &b, &mut x, None, &s).converged);
        let mut x2 = vec![0.0; 200];
        let rep = gmres(&op, &b, &mut x2, None, &s);
        assert!(rep.converged, "{rep:?}");
        assert!(x.iter().zip(&x2).all(|(a, b)| (a - b).abs() < 1e-8));
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let op = Conv { n: 10 };
        let mut x = vec![1.0; 10];
        let rep = solve(&op, &[0.0; 10], &mut x, None, &KrylovSettings::default()).unwrap();
        assert!(rep.converged);
        assert!(x.iter().all(|v| *v == 0.0));
    }
}
