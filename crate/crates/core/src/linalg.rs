//! Small fixed-size tensors in three dimensions.

use crate::prelude::*;
use serde::{Deserialize, Serialize};

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

/// Packed symmetric 3x3 tensor, order (00, 01, 02, 11, 12, 22).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Sym3(pub [f64; 6]);

#[inline]
pub const fn sym_index(a: usize, b: usize) -> usize {
    const T: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];
    T[a][b]
}

impl Sym3 {
    pub const ZERO: Sym3 = Sym3([0.0; 6]);
    pub const IDENTITY: Sym3 = Sym3([1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.0[sym_index(a, b)]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, v: f64) {
        self.0[sym_index(a, b)] = v;
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Sym3([f(0, 0), f(0, 1), f(0, 2), f(1, 1), f(1, 2), f(2, 2)])
    }

    pub fn diag(d: f64) -> Self {
        Sym3([d, 0.0, 0.0, d, 0.0, d])
    }

    pub fn to_mat(&self) -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        for (a, row) in m.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                *v = self.get(a, b);
            }
        }
        m
    }

    /// Symmetric part of a general matrix.
    pub fn sym_of(m: &Mat3) -> Self {
        Sym3::from_fn(|a, b| 0.5 * (m[a][b] + m[b][a]))
    }

    #[inline]
    pub fn scale(&self, s: f64) -> Self {
        let mut o = *self;
        o.0.iter_mut().for_each(|v| *v *= s);
        o
    }

    #[inline]
    pub fn add(&self, o: &Sym3) -> Self {
        let mut r = *self;
        for (v, w) in r.0.iter_mut().zip(o.0.iter()) {
            *v += w;
        }
        r
    }

    #[inline]
    pub fn sub(&self, o: &Sym3) -> Self {
        let mut r = *self;
        for (v, w) in r.0.iter_mut().zip(o.0.iter()) {
            *v -= w;
        }
        r
    }

    pub fn det(&self) -> f64 {
        let [a, b, c, d, e, f] = self.0;
        a * (d * f - e * e) - b * (b * f - e * c) + c * (b * e - d * c)
    }

    /// Inverse, or `None` when the determinant vanishes.
    pub fn inverse(&self) -> Option<Sym3> {
        let [a, b, c, d, e, f] = self.0;
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let inv = 1.0 / det;
        Some(Sym3([
            (d * f - e * e) * inv,
            (c * e - b * f) * inv,
            (b * e - c * d) * inv,
            (a * f - c * c) * inv,
            (b * c - a * e) * inv,
            (a * d - b * b) * inv,
        ]))
    }

    /// Sylvester test on leading minors.
    pub fn is_positive_definite(&self) -> bool {
        let [a, b, _, d, _, _] = self.0;
        a > 0.0 && a * d - b * b > 0.0 && self.det() > 0.0
    }

    /// Full contraction `A_ab B^ab` of two packed tensors.
    #[inline]
    pub fn dot(&self, o: &Sym3) -> f64 {
        let a = &self.0;
        let b = &o.0;
        a[0] * b[0] + a[3] * b[3] + a[5] * b[5] + 2.0 * (a[1] * b[1] + a[2] * b[2] + a[4] * b[4])
    }

    /// `g^{ab} S_ab` with `self` the inverse metric.
    #[inline]
    pub fn trace_with(&self, s: &Sym3) -> f64 {
        self.dot(s)
    }

    /// Index raising: `(g^{-1} S g^{-1})^{ab}`.
    pub fn raise(&self, ginv: &Sym3) -> Sym3 {
        let gi = ginv.to_mat();
        let s = self.to_mat();
        let mut t = [[0.0; 3]; 3];
        for a in 0..3 {
            for d in 0..3 {
                let mut acc = 0.0;
                for c in 0..3 {
                    acc += gi[a][c] * s[c][d];
                }
                t[a][d] = acc;
            }
        }
        Sym3::from_fn(|a, b| (0..3).map(|d| t[a][d] * gi[d][b]).sum())
    }

    /// `|S|^2_g = g^{ac} g^{bd} S_ab S_cd`.
    pub fn norm_sq(&self, ginv: &Sym3) -> f64 {
        self.raise(ginv).dot(self)
    }

    /// Trace-free part with respect to `g`.
    pub fn trace_free(&self, g: &Sym3, ginv: &Sym3) -> Sym3 {
        let tr = ginv.trace_with(self);
        self.sub(&g.scale(tr / 3.0))
    }

    #[inline]
    pub fn mul_vec(&self, v: &Vec3) -> Vec3 {
        [
            self.0[0] * v[0] + self.0[1] * v[1] + self.0[2] * v[2],
            self.0[1] * v[0] + self.0[3] * v[1] + self.0[4] * v[2],
            self.0[2] * v[0] + self.0[4] * v[1] + self.0[5] * v[2],
        ]
    }

    /// `J^T S J`, the pullback of a bilinear form through a linear map.
    pub fn congruence(&self, j: &Mat3) -> Sym3 {
        let s = self.to_mat();
        Sym3::from_fn(|a, b| {
            let mut acc = 0.0;
            for c in 0..3 {
                for d in 0..3 {
                    acc += j[c][a] * j[d][b] * s[c][d];
                }
            }
            acc
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[inline]
pub fn dot3(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn mat_vec(m: &Mat3, v: &Vec3) -> Vec3 {
    [dot3(&m[0], v), dot3(&m[1], v), dot3(&m[2], v)]
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    m
}

pub const IDENTITY3: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Values that can live at a grid node and be combined linearly.
pub trait NodeValue: Copy + Default + Send + Sync + 'static {
    const COMPONENTS: usize;
    fn comps(&self) -> &[f64];
    fn comps_mut(&mut self) -> &mut [f64];

    #[inline]
    fn axpy(&mut self, a: f64, x: &Self) {
        for (s, v) in self.comps_mut().iter_mut().zip(x.comps()) {
            *s += a * v;
        }
    }

    #[inline]
    fn scaled(&self, a: f64) -> Self {
        let mut o = *self;
        o.comps_mut().iter_mut().for_each(|v| *v *= a);
        o
    }

    fn max_abs(&self) -> f64 {
        self.comps().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Euclidean (Frobenius) norm squared of the components.
    fn frob_sq(&self) -> f64 {
        self.comps().iter().map(|v| v * v).sum()
    }

    /// Norm measured with the metric `g` (inverse `ginv`) for the given index type.
    fn g_norm(&self, kind: crate::grid::Covariance, g: &Sym3, ginv: &Sym3) -> f64;
}

impl NodeValue for f64 {
    const COMPONENTS: usize = 1;
    fn comps(&self) -> &[f64] {
        core::slice::from_ref(self)
    }
    fn comps_mut(&mut self) -> &mut [f64] {
        core::slice::from_mut(self)
    }
    fn g_norm(&self, _: crate::grid::Covariance, _: &Sym3, _: &Sym3) -> f64 {
        self.abs()
    }
}

impl NodeValue for Vec3 {
    const COMPONENTS: usize = 3;
    fn comps(&self) -> &[f64] {
        self
    }
    fn comps_mut(&mut self) -> &mut [f64] {
        self
    }
    fn g_norm(&self, kind: crate::grid::Covariance, g: &Sym3, ginv: &Sym3) -> f64 {
        let m = if kind == crate::grid::Covariance::OneForm { ginv } else { g };
        dot3(self, &m.mul_vec(self)).max(0.0).sqrt()
    }
}

impl NodeValue for Sym3 {
    const COMPONENTS: usize = 6;
    fn comps(&self) -> &[f64] {
        &self.0
    }
    fn comps_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
    fn frob_sq(&self) -> f64 {
        self.dot(self)
    }
    fn g_norm(&self, _: crate::grid::Covariance, _: &Sym3, ginv: &Sym3) -> f64 {
        self.norm_sq(ginv).max(0.0).sqrt()
    }
}

/// Solve a small dense system by Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k].abs() < 1e-300 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f != 0.0 {
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Some(x)
}
