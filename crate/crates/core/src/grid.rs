//! Uniform grids in half-space coordinates and the fields sampled on them.

use crate::error::{GlueError, Result};
use crate::linalg::{NodeValue, Sym3, Vec3};
use crate::prelude::*;
use serde::{Deserialize, Serialize};

/// Uniform box `[y_min, y_max] x [-x_extent, x_extent]^2` with spacing `h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartGrid {
    pub y_min: f64,
    pub h: f64,
    pub n_y: usize,
    pub n_x1: usize,
    pub n_x2: usize,
}

impl ChartGrid {
    pub fn new(y_min: f64, h: f64, n_y: usize, n_x1: usize, n_x2: usize) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(GlueError::Parameter(format!("grid spacing {h} must be positive")));
        }
        if !(y_min > 0.0) {
            return Err(GlueError::Parameter(format!("y_min {y_min} must be positive")));
        }
        if n_y < 4 || n_x1 < 4 || n_x2 < 4 {
            return Err(GlueError::Parameter(format!("grid counts ({n_y}, {n_x1}, {n_x2}) must be at least 4")));
        }
        Ok(ChartGrid { y_min, h, n_y, n_x1, n_x2 })
    }

    /// Smallest grid with spacing `h` covering `y <= y_max` and `|x^j| <= x_extent`.
    pub fn covering(y_min: f64, y_max: f64, x_extent: f64, h: f64) -> Result<Self> {
        if !(y_max > y_min) || !(x_extent > 0.0) {
            return Err(GlueError::Parameter(format!("empty box y in [{y_min}, {y_max}], |x| <= {x_extent}")));
        }
        let n_y = ((y_max - y_min) / h - 1e-9).ceil() as usize + 1;
        let half = (x_extent / h - 1e-9).ceil() as usize;
        ChartGrid::new(y_min, h, n_y.max(4), 2 * half + 1, 2 * half + 1)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n_y * self.n_x1 * self.n_x2
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn y_max(&self) -> f64 {
        self.y_min + (self.n_y - 1) as f64 * self.h
    }

    pub fn x_extent(&self) -> f64 {
        0.5 * (self.n_x1 - 1) as f64 * self.h
    }

    #[inline]
    pub fn x1_min(&self) -> f64 {
        -0.5 * (self.n_x1 - 1) as f64 * self.h
    }

    #[inline]
    pub fn x2_min(&self) -> f64 {
        -0.5 * (self.n_x2 - 1) as f64 * self.h
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        [self.n_y, self.n_x1, self.n_x2]
    }

    #[inline]
    pub fn strides(&self) -> [usize; 3] {
        [self.n_x1 * self.n_x2, self.n_x2, 1]
    }

    #[inline]
    pub fn index(&self, i: [usize; 3]) -> usize {
        (i[0] * self.n_x1 + i[1]) * self.n_x2 + i[2]
    }

    #[inline]
    pub fn ijk(&self, n: usize) -> [usize; 3] {
        let i2 = n % self.n_x2;
        let r = n / self.n_x2;
        [r / self.n_x1, r % self.n_x1, i2]
    }

    #[inline]
    pub fn y_at(&self, iy: usize) -> f64 {
        self.y_min + iy as f64 * self.h
    }

    #[inline]
    pub fn point_ijk(&self, i: [usize; 3]) -> Vec3 {
        [
            self.y_at(i[0]),
            self.x1_min() + i[1] as f64 * self.h,
            self.x2_min() + i[2] as f64 * self.h,
        ]
    }

    #[inline]
    pub fn point(&self, n: usize) -> Vec3 {
        self.point_ijk(self.ijk(n))
    }

    pub fn is_face(&self, i: [usize; 3]) -> bool {
        let d = self.dims();
        (0..3).any(|a| i[a] == 0 || i[a] + 1 == d[a])
    }

    /// Neighbor index offset by `o` along each axis, if inside the box.
    #[inline]
    pub fn offset(&self, i: [usize; 3], o: [isize; 3]) -> Option<usize> {
        let d = self.dims();
        let mut j = [0usize; 3];
        for a in 0..3 {
            let v = i[a] as isize + o[a];
            if v < 0 || v >= d[a] as isize {
                return None;
            }
            j[a] = v as usize;
        }
        Some(self.index(j))
    }

    /// Same grid with spacing halved over the same box.
    pub fn refined(&self) -> Result<Self> {
        ChartGrid::new(self.y_min, 0.5 * self.h, 2 * self.n_y - 1, 2 * self.n_x1 - 1, 2 * self.n_x2 - 1)
    }

    fn locate(&self, p: &Vec3) -> Result<[f64; 3]> {
        let lo = [self.y_min, self.x1_min(), self.x2_min()];
        let d = self.dims();
        let mut s = [0.0; 3];
        for a in 0..3 {
            let t = (p[a] - lo[a]) / self.h;
            let tol = 1e-9;
            if t < -tol || t > (d[a] - 1) as f64 + tol {
                return Err(GlueError::Extrapolation(format!(
                    "({:.4}, {:.4}, {:.4}) outside grid",
                    p[0], p[1], p[2]
                )));
            }
            s[a] = t.clamp(0.0, (d[a] - 1) as f64);
        }
        Ok(s)
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        self.locate(p).is_ok()
    }

    /// Tricubic Lagrange weights: 64 `(node, weight)` pairs, stencil shifted inward at edges.
    pub fn tricubic_weights(&self, p: &Vec3) -> Result<[(usize, f64); 64]> {
        let s = self.locate(p)?;
        let d = self.dims();
        let mut base = [0usize; 3];
        let mut w = [[0.0; 4]; 3];
        for a in 0..3 {
            let b = (s[a].floor() as isize - 1).clamp(0, d[a] as isize - 4) as usize;
            base[a] = b;
            let t = s[a] - b as f64;
            w[a] = lagrange4(t);
        }
        let mut out = [(0usize, 0.0); 64];
        let mut k = 0;
        for i in 0..4 {
            for j in 0..4 {
                for l in 0..4 {
                    out[k] = (
                        self.index([base[0] + i, base[1] + j, base[2] + l]),
                        w[0][i] * w[1][j] * w[2][l],
                    );
                    k += 1;
                }
            }
        }
        Ok(out)
    }

    /// Trilinear weights: 8 `(node, weight)` pairs.
    pub fn trilinear_weights(&self, p: &Vec3) -> Result<[(usize, f64); 8]> {
        let s = self.locate(p)?;
        let d = self.dims();
        let mut base = [0usize; 3];
        let mut t = [0.0; 3];
        for a in 0..3 {
            let b = (s[a].floor() as usize).min(d[a] - 2);
            base[a] = b;
            t[a] = s[a] - b as f64;
        }
        let mut out = [(0usize, 0.0); 8];
        let mut k = 0;
        for i in 0..2 {
            for j in 0..2 {
                for l in 0..2 {
                    let wy = if i == 0 { 1.0 - t[0] } else { t[0] };
                    let w1 = if j == 0 { 1.0 - t[1] } else { t[1] };
                    let w2 = if l == 0 { 1.0 - t[2] } else { t[2] };
                    out[k] = (self.index([base[0] + i, base[1] + j, base[2] + l]), wy * w1 * w2);
                    k += 1;
                }
            }
        }
        Ok(out)
    }
}

/// Cubic Lagrange basis on nodes 0, 1, 2, 3 evaluated at `t`.
fn lagrange4(t: f64) -> [f64; 4] {
    let (a, b, c, d) = (t, t - 1.0, t - 2.0, t - 3.0);
    [-b * c * d / 6.0, a * c * d / 2.0, -a * b * d / 2.0, a * b * c / 6.0]
}

/// Index type of a field; sets the power of `y` used by compactified differencing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Covariance {
    Scalar,
    Vector,
    OneForm,
    Sym2,
}

impl Covariance {
    /// Natural scaling exponent: a field of this type with bounded hyperbolic
    /// norm has components of size `y^-weight`.
    pub fn weight(self) -> i32 {
        match self {
            Covariance::Scalar => 0,
            Covariance::Vector => -1,
            Covariance::OneForm => 1,
            Covariance::Sym2 => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    grid: ChartGrid,
    kind: Covariance,
    data: Vec<T>,
}

pub type ScalarField = Field<f64>;
pub type VectorField = Field<Vec3>;
pub type OneFormField = Field<Vec3>;
pub type SymTensorField = Field<Sym3>;

impl<T: NodeValue> Field<T> {
    pub fn zeros(grid: ChartGrid, kind: Covariance) -> Self {
        Field { grid, kind, data: vec![T::default(); grid.len()] }
    }

    pub fn from_vec(grid: ChartGrid, kind: Covariance, data: Vec<T>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(GlueError::GridMismatch(format!("{} values for {} nodes", data.len(), grid.len())));
        }
        Ok(Field { grid, kind, data })
    }

    pub fn from_fn(grid: ChartGrid, kind: Covariance, mut f: impl FnMut(usize, Vec3) -> T) -> Self {
        let data = (0..grid.len()).map(|n| f(n, grid.point(n))).collect();
        Field { grid, kind, data }
    }

    pub fn try_from_fn(
        grid: ChartGrid,
        kind: Covariance,
        mut f: impl FnMut(usize, Vec3) -> Result<T>,
    ) -> Result<Self> {
        let data = (0..grid.len()).map(|n| f(n, grid.point(n))).collect::<Result<Vec<_>>>()?;
        Ok(Field { grid, kind, data })
    }

    #[inline]
    pub fn grid(&self) -> &ChartGrid {
        &self.grid
    }

    #[inline]
    pub fn kind(&self) -> Covariance {
        self.kind
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn at(&self, n: usize) -> &T {
        &self.data[n]
    }

    pub fn map<U: NodeValue>(&self, kind: Covariance, mut f: impl FnMut(usize, &T) -> U) -> Field<U> {
        Field { grid: self.grid, kind, data: self.data.iter().enumerate().map(|(n, v)| f(n, v)).collect() }
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map(self.kind, |_, v| v.scaled(a))
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.check_grid(o.grid())?;
        let mut r = self.clone();
        for (v, w) in r.data.iter_mut().zip(o.data.iter()) {
            v.axpy(1.0, w);
        }
        Ok(r)
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.check_grid(o.grid())?;
        let mut r = self.clone();
        for (v, w) in r.data.iter_mut().zip(o.data.iter()) {
            v.axpy(-1.0, w);
        }
        Ok(r)
    }

    pub fn check_grid(&self, g: &ChartGrid) -> Result<()> {
        if &self.grid != g {
            return Err(GlueError::GridMismatch(format!("{:?} vs {:?}", self.grid, g)));
        }
        Ok(())
    }

    /// Largest component magnitude over the nodes selected by `mask`.
    pub fn max_abs(&self, mask: Option<&[bool]>) -> f64 {
        self.data
            .iter()
            .enumerate()
            .filter(|(n, _)| mask.is_none_or(|m| m[*n]))
            .fold(0.0, |m, (_, v)| m.max(v.max_abs()))
    }

    /// Tricubic interpolation at an arbitrary point in the box.
    pub fn interpolate(&self, p: &Vec3) -> Result<T> {
        let w = self.grid.tricubic_weights(p)?;
        let mut acc = T::default();
        for (n, c) in w.iter() {
            acc.axpy(*c, &self.data[*n]);
        }
        Ok(acc)
    }

    /// Rows of `(y, x1, x2, components...)` for plain-text dumps.
    pub fn rows(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        self.data.iter().enumerate().map(move |(n, v)| {
            let p = self.grid.point(n);
            let mut row = Vec::with_capacity(3 + T::COMPONENTS);
            row.extend_from_slice(&p);
            row.extend_from_slice(v.comps());
            row
        })
    }
}

/// Symmetric positive definite 2-tensor field.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricField(SymTensorField);

impl MetricField {
    pub fn new(field: SymTensorField) -> Result<Self> {
        if let Some(n) = field.data().iter().position(|g| !g.is_positive_definite()) {
            return Err(GlueError::NotPositiveDefinite { node: n });
        }
        Ok(MetricField(field))
    }

    /// The hyperbolic metric `y^-2 delta` sampled on `grid`.
    pub fn hyperbolic(grid: ChartGrid) -> Self {
        MetricField(Field::from_fn(grid, Covariance::Sym2, |_, p| Sym3::diag(1.0 / (p[0] * p[0]))))
    }

    #[inline]
    pub fn field(&self) -> &SymTensorField {
        &self.0
    }

    #[inline]
    pub fn grid(&self) -> &ChartGrid {
        self.0.grid()
    }

    #[inline]
    pub fn at(&self, n: usize) -> &Sym3 {
        self.0.at(n)
    }

    pub fn conformal(&self, factor: &ScalarField) -> Result<Self> {
        factor.check_grid(self.grid())?;
        MetricField::new(self.0.map(Covariance::Sym2, |n, g| g.scale(*factor.at(n))))
    }
}

impl core::ops::Deref for MetricField {
    type Target = SymTensorField;
    fn deref(&self) -> &SymTensorField {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let g = ChartGrid::new(0.5, 0.25, 5, 6, 7).unwrap();
        for n in 0..g.len() {
            assert_eq!(g.index(g.ijk(n)), n);
        }
    }

    #[test]
    fn rejects_low_boundary() {
        assert!(ChartGrid::new(0.0, 0.1, 5, 5, 5).is_err());
        assert!(ChartGrid::new(0.2, 0.1, 3, 5, 5).is_err());
    }

    #[test]
    fn tricubic_reproduces_cubics() {
        let g = ChartGrid::covering(0.5, 2.0, 1.0, 0.125).unwrap();
        let f = |p: Vec3| p[0].powi(3) - 2.0 * p[0] * p[1] * p[2] + p[2] * p[2] + 1.0;
        let field = Field::from_fn(g, Covariance::Scalar, |_, p| f(p));
        for p in [[0.61, 0.13, -0.77], [1.99, 0.99, 0.01], [0.5, -1.0, -1.0]] {
            assert!((field.interpolate(&p).unwrap() - f(p)).abs() < 1e-12);
        }
        assert!(field.interpolate(&[0.3, 0.0, 0.0]).is_err());
    }

    #[test]
    fn trilinear_weights_sum_to_one() {
        let g = ChartGrid::covering(0.5, 2.0, 1.0, 0.125).unwrap();
        let w = g.trilinear_weights(&[1.03, 0.2, -0.31]).unwrap();
        assert!((w.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-14);
    }
}
