//! Half-space model of hyperbolic space: metric, defining function, inversion,
//! Möbius charts and discrete weighted norms.

use crate::error::{GlueError, Result};
use crate::fd;
use crate::grid::{Field, MetricField, ScalarField};
use crate::linalg::{Mat3, NodeValue, Sym3, Vec3, IDENTITY3};
use crate::prelude::*;
use serde::{Deserialize, Serialize};

fn check_upper(p: &Vec3) -> Result<()> {
    if !(p[0] > 0.0) {
        return Err(GlueError::Domain(format!("y = {} must be positive", p[0])));
    }
    Ok(())
}

/// `y^-2 delta` and its inverse `y^2 delta`.
pub fn hyperbolic_metric_at(p: &Vec3) -> Result<(Sym3, Sym3)> {
    check_upper(p)?;
    let y2 = p[0] * p[0];
    Ok((Sym3::diag(1.0 / y2), Sym3::diag(y2)))
}

/// `2y / (|x|^2 + (y+1)^2)` and its coordinate gradient.
pub fn model_defining_function(p: &Vec3) -> Result<(f64, Vec3)> {
    check_upper(p)?;
    let [y, x1, x2] = *p;
    let den = x1 * x1 + x2 * x2 + (y + 1.0) * (y + 1.0);
    let v = 2.0 * y / den;
    let k = -2.0 * y / (den * den);
    Ok((v, [2.0 / den + k * 2.0 * (y + 1.0), k * 2.0 * x1, k * 2.0 * x2]))
}

/// The reflection matrix `Q^{ac} = delta^{ac} - 2 x^a x^c / r^2`.
pub fn q_matrix(p: &Vec3) -> Result<Mat3> {
    let r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    if !(r2 > 0.0) {
        return Err(GlueError::Domain("inversion undefined at the origin".into()));
    }
    let mut q = IDENTITY3;
    for a in 0..3 {
        for c in 0..3 {
            q[a][c] -= 2.0 * p[a] * p[c] / r2;
        }
    }
    Ok(q)
}

/// Inversion in the unit sphere and its Jacobian `J[c][a] = d I^c / d p^a`.
pub fn inversion(p: &Vec3) -> Result<(Vec3, Mat3)> {
    let q = q_matrix(p)?;
    let r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    let mut j = q;
    for row in j.iter_mut() {
        for v in row.iter_mut() {
            *v /= r2;
        }
    }
    Ok(([p[0] / r2, p[1] / r2, p[2] / r2], j))
}

/// A differentiable map between half-space charts.
pub trait ChartMap {
    /// Image point and Jacobian `J[c][a] = d map^c / d p^a`.
    fn apply(&self, p: &Vec3) -> Result<(Vec3, Mat3)>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl ChartMap for Identity {
    fn apply(&self, p: &Vec3) -> Result<(Vec3, Mat3)> {
        Ok((*p, IDENTITY3))
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Inversion;

impl ChartMap for Inversion {
    fn apply(&self, p: &Vec3) -> Result<(Vec3, Mat3)> {
        inversion(p)
    }
}

/// `(y, x) -> (s y, s x + c)`, a hyperbolic isometry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MobiusMap {
    pub center: [f64; 2],
    pub scale: f64,
}

pub fn mobius_parametrization(center: [f64; 2], scale: f64) -> Result<MobiusMap> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(GlueError::Parameter(format!("Möbius scale {scale} must be positive")));
    }
    Ok(MobiusMap { center, scale })
}

impl ChartMap for MobiusMap {
    fn apply(&self, p: &Vec3) -> Result<(Vec3, Mat3)> {
        let s = self.scale;
        let j = [[s, 0.0, 0.0], [0.0, s, 0.0], [0.0, 0.0, s]];
        Ok(([s * p[0], s * p[1] + self.center[0], s * p[2] + self.center[1]], j))
    }
}

/// `second o first`.
pub struct Compose<A, B>(pub A, pub B);

impl<A: ChartMap, B: ChartMap> ChartMap for Compose<A, B> {
    fn apply(&self, p: &Vec3) -> Result<(Vec3, Mat3)> {
        let (q, ja) = self.0.apply(p)?;
        let (r, jb) = self.1.apply(&q)?;
        Ok((r, crate::linalg::mat_mul(&jb, &ja)))
    }
}

/// Pullback of a closed-form metric through `map`.
pub fn pullback_metric_with(map: &impl ChartMap, metric: impl Fn(&Vec3) -> Result<Sym3>, p: &Vec3) -> Result<Sym3> {
    let (q, j) = map.apply(p)?;
    Ok(metric(&q)?.congruence(&j))
}

/// Pullback of a sampled metric; the target value is interpolated tricubically.
pub fn pullback_metric(map: &impl ChartMap, metric: &MetricField, p: &Vec3) -> Result<Sym3> {
    pullback_metric_with(map, |q| metric.interpolate(q), p)
}

/// Which part of the weighted norm to include.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormOrder {
    C0,
    C1,
    C2,
}

/// Discrete sup of `rho^-delta (|T|_g + sum_k y^{w+k} |d^k T|)` over selected nodes.
///
/// Derivative parts are Euclidean norms of coordinate differences rescaled by
/// powers of `y`, which is what a Möbius chart of unit size sees.
pub fn weighted_grid_norm<T: NodeValue>(
    field: &Field<T>,
    rho: &ScalarField,
    delta: f64,
    order: NormOrder,
    metric: Option<&MetricField>,
    mask: Option<&[bool]>,
) -> Result<f64> {
    let grid = *field.grid();
    rho.check_grid(&grid)?;
    if let Some(g) = metric {
        g.check_grid(&grid)?;
    }
    if let Some(m) = mask {
        if m.len() != grid.len() {
            return Err(GlueError::GridMismatch("mask length".into()));
        }
    }
    let w = field.kind().weight();
    let mut best = 0.0f64;
    for n in 0..grid.len() {
        if mask.is_some_and(|m| !m[n]) {
            continue;
        }
        let r = *rho.at(n);
        if !(r > 0.0) {
            return Err(GlueError::Domain(format!("weight function not positive at node {n}")));
        }
        let p = grid.point(n);
        let (g, gi) = match metric {
            Some(m) => {
                let g = *m.at(n);
                (g, g.inverse().ok_or(GlueError::NotPositiveDefinite { node: n })?)
            }
            None => hyperbolic_metric_at(&p)?,
        };
        let mut total = field.at(n).g_norm(field.kind(), &g, &gi);
        if order != NormOrder::C0 {
            let i = grid.ijk(n);
            let y = p[0];
            if order == NormOrder::C1 {
                let d = fd::gradient(&grid, field.data(), i, w);
                let s: f64 = d.iter().map(|v| v.frob_sq()).sum();
                total += y.powi(w + 1) * s.sqrt();
            } else {
                let (d, dd) = fd::gradient_hessian(&grid, field.data(), i, w);
                let s: f64 = d.iter().map(|v| v.frob_sq()).sum();
                let s2: f64 = dd.iter().flat_map(|row| row.iter()).map(|v| v.frob_sq()).sum();
                total += y.powi(w + 1) * s.sqrt() + y.powi(w + 2) * s2.sqrt();
            }
        }
        best = best.max(total / r.powf(delta));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{ChartGrid, Covariance};

    #[test]
    fn metric_examples() {
        assert_eq!(hyperbolic_metric_at(&[1.0, 0.0, 0.0]).unwrap().0, Sym3::IDENTITY);
        assert_eq!(hyperbolic_metric_at(&[2.0, 0.0, 0.0]).unwrap().0, Sym3::diag(0.25));
        assert!(hyperbolic_metric_at(&[0.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn defining_function_examples() {
        assert_eq!(model_defining_function(&[1.0, 0.0, 0.0]).unwrap().0, 0.5);
        let p = [1e-3, 0.3, -0.2];
        let (v, d) = model_defining_function(&p).unwrap();
        let ratio = p[0] * p[0] * crate::linalg::dot3(&d, &d) / (v * v);
        assert!((ratio - 1.0).abs() < 1e-2);
        let (ip, _) = inversion(&[2.0, 0.0, 0.0]).unwrap();
        assert_eq!(model_defining_function(&ip).unwrap().0, model_defining_function(&[0.5, 0.0, 0.0]).unwrap().0);
    }

    #[test]
    fn defining_function_gradient() {
        let p = [0.7, 0.2, -0.4];
        let (_, d) = model_defining_function(&p).unwrap();
        let h = 1e-6;
        for a in 0..3 {
            let mut pp = p;
            let mut pm = p;
            pp[a] += h;
            pm[a] -= h;
            let fd = (model_defining_function(&pp).unwrap().0 - model_defining_function(&pm).unwrap().0) / (2.0 * h);
            assert!((fd - d[a]).abs() < 1e-8);
        }
    }

    #[test]
    fn inversion_examples() {
        assert_eq!(inversion(&[1.0, 0.0, 0.0]).unwrap().0, [1.0, 0.0, 0.0]);
        assert_eq!(inversion(&[2.0, 0.0, 0.0]).unwrap().0, [0.5, 0.0, 0.0]);
        assert!(inversion(&[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn norm_examples() {
        let g = ChartGrid::covering(0.5, 2.0, 1.0, 0.25).unwrap();
        let rho = Field::from_fn(g, Covariance::Scalar, |_, p| p[0]);
        assert!((weighted_grid_norm(&rho, &rho, 1.0, NormOrder::C0, None, None).unwrap() - 1.0).abs() < 1e-15);
        let zero = ScalarField::zeros(g, Covariance::Scalar);
        assert_eq!(weighted_grid_norm(&zero, &rho, 1.0, NormOrder::C2, None, None).unwrap(), 0.0);
        let sq = rho.map(Covariance::Scalar, |_, v| v * v);
        let max_rho = rho.max_abs(None);
        assert!((weighted_grid_norm(&sq, &rho, 1.0, NormOrder::C0, None, None).unwrap() - max_rho).abs() < 1e-14);
    }
}
