//! Second-order finite differences with compactified `y` weighting.
//!
//! Tensor components on half-space blow up like `y^-w` near `y = 0`. The
//! stencils difference `y^w T` (which is smooth up to the boundary) and put the
//! power of `y` back analytically, so the truncation error does not pick up
//! negative powers of `y`.

use crate::grid::ChartGrid;
use crate::linalg::NodeValue;
#[allow(unused_imports)]
use crate::prelude::*;

/// Three-point first-derivative rule at index `i` of `n`: centered inside,
/// one-sided second order at the ends. Coefficients still need `1/h`.
#[inline]
pub fn d1_rule(i: usize, n: usize) -> ([isize; 3], [f64; 3]) {
    if i == 0 {
        ([0, 1, 2], [-1.5, 2.0, -0.5])
    } else if i + 1 == n {
        ([0, -1, -2], [1.5, -2.0, 0.5])
    } else {
        ([-1, 0, 1], [-0.5, 0.0, 0.5])
    }
}

/// Second-derivative rule; four points one-sided at the ends. Needs `1/h^2`.
#[inline]
pub fn d2_rule(i: usize, n: usize) -> ([isize; 4], [f64; 4]) {
    if i == 0 {
        ([0, 1, 2, 3], [2.0, -5.0, 4.0, -1.0])
    } else if i + 1 == n {
        ([0, -1, -2, -3], [2.0, -5.0, 4.0, -1.0])
    } else {
        ([-1, 0, 1, 0], [1.0, -2.0, 1.0, 0.0])
    }
}

#[inline]
fn shift(grid: &ChartGrid, i: [usize; 3], axis: usize, o: isize) -> [usize; 3] {
    let mut j = i;
    j[axis] = (i[axis] as isize + o) as usize;
    debug_assert!(j[axis] < grid.dims()[axis]);
    j
}

#[inline]
fn ratio(grid: &ChartGrid, iy: usize, o: isize, w: i32) -> f64 {
    if w == 0 || o == 0 {
        return 1.0;
    }
    let y = grid.y_at(iy);
    let yo = y + o as f64 * grid.h;
    (yo / y).powi(w)
}

/// Undivided plain difference `D_axis T` at node `i` (already scaled by `1/h`).
#[inline]
fn plain_d1<T: NodeValue>(grid: &ChartGrid, data: &[T], i: [usize; 3], axis: usize) -> T {
    let (offs, c) = d1_rule(i[axis], grid.dims()[axis]);
    let mut acc = T::default();
    for k in 0..3 {
        if c[k] != 0.0 {
            acc.axpy(c[k], &data[grid.index(shift(grid, i, axis, offs[k]))]);
        }
    }
    acc.scaled(1.0 / grid.h)
}

/// Gradient `[d_y T, d_x1 T, d_x2 T]` at node `i`, differencing `y^w T`.
pub fn gradient<T: NodeValue>(grid: &ChartGrid, data: &[T], i: [usize; 3], w: i32) -> [T; 3] {
    let mut out = [T::default(); 3];
    out[1] = plain_d1(grid, data, i, 1);
    out[2] = plain_d1(grid, data, i, 2);
    let (offs, c) = d1_rule(i[0], grid.n_y);
    let mut acc = T::default();
    for k in 0..3 {
        if c[k] != 0.0 {
            let r = ratio(grid, i[0], offs[k], w);
            acc.axpy(c[k] * r, &data[grid.index(shift(grid, i, 0, offs[k]))]);
        }
    }
    acc = acc.scaled(1.0 / grid.h);
    if w != 0 {
        let y = grid.y_at(i[0]);
        acc.axpy(-(w as f64) / y, &data[grid.index(i)]);
    }
    out[0] = acc;
    out
}

/// Gradient and Hessian at node `i`, differencing `y^w T`.
pub fn gradient_hessian<T: NodeValue>(grid: &ChartGrid, data: &[T], i: [usize; 3], w: i32) -> ([T; 3], [[T; 3]; 3]) {
    let h = grid.h;
    let d = grid.dims();
    let y = grid.y_at(i[0]);
    let wf = w as f64;
    let here = data[grid.index(i)];
    let grad = gradient(grid, data, i, w);
    let mut hess = [[T::default(); 3]; 3];

    // d_y d_y: D^2 G - (2w/y) D G + w(w+1)/y^2 T with G_o = (y_o/y)^w T_o.
    {
        let (offs, c) = d2_rule(i[0], d[0]);
        let mut d2g = T::default();
        for k in 0..4 {
            if c[k] != 0.0 {
                let r = ratio(grid, i[0], offs[k], w);
                d2g.axpy(c[k] * r, &data[grid.index(shift(grid, i, 0, offs[k]))]);
            }
        }
        let mut v = d2g.scaled(1.0 / (h * h));
        if w != 0 {
            // D G = grad[0] + (w/y) T
            let mut dg = grad[0];
            dg.axpy(wf / y, &here);
            v.axpy(-2.0 * wf / y, &dg);
            v.axpy(wf * (wf + 1.0) / (y * y), &here);
        }
        hess[0][0] = v;
    }
    // d_j d_j for tangential axes.
    for a in 1..3 {
        let (offs, c) = d2_rule(i[a], d[a]);
        let mut v = T::default();
        for k in 0..4 {
            if c[k] != 0.0 {
                v.axpy(c[k], &data[grid.index(shift(grid, i, a, offs[k]))]);
            }
        }
        hess[a][a] = v.scaled(1.0 / (h * h));
    }
    // d_y d_j: D_y((y_o/y)^w D_j T) - (w/y) D_j T.
    for a in 1..3 {
        let (offs, c) = d1_rule(i[0], d[0]);
        let mut v = T::default();
        for k in 0..3 {
            if c[k] != 0.0 {
                let r = ratio(grid, i[0], offs[k], w);
                let dj = plain_d1(grid, data, shift(grid, i, 0, offs[k]), a);
                v.axpy(c[k] * r, &dj);
            }
        }
        let mut v = v.scaled(1.0 / h);
        if w != 0 {
            v.axpy(-wf / y, &grad[a]);
        }
        hess[0][a] = v;
        hess[a][0] = v;
    }
    // d_1 d_2.
    {
        let (offs, c) = d1_rule(i[1], d[1]);
        let mut v = T::default();
        for k in 0..3 {
            if c[k] != 0.0 {
                let d2 = plain_d1(grid, data, shift(grid, i, 1, offs[k]), 2);
                v.axpy(c[k], &d2);
            }
        }
        let v = v.scaled(1.0 / h);
        hess[1][2] = v;
        hess[2][1] = v;
    }
    (grad, hess)
}
