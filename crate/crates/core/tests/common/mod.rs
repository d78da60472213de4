//! Pointwise reference values for the grid operators, computed from closed-form
//! fields with sixth-order central differences at a fixed small step.

#![allow(dead_code, clippy::needless_range_loop)]

use ahglue_core::linalg::{Sym3, Vec3};

const STEP: f64 = 2e-3;

/// Sixth-order central difference of a vector-valued closed form along axis `a`.
pub fn partial<const N: usize>(f: &dyn Fn(&Vec3) -> [f64; N], p: &Vec3, a: usize) -> [f64; N] {
    let at = |k: f64| {
        let mut q = *p;
        q[a] += k * STEP;
        f(&q)
    };
    let (p1, m1, p2, m2, p3, m3) = (at(1.0), at(-1.0), at(2.0), at(-2.0), at(3.0), at(-3.0));
    core::array::from_fn(|i| (45.0 * (p1[i] - m1[i]) - 9.0 * (p2[i] - m2[i]) + (p3[i] - m3[i])) / (60.0 * STEP))
}

pub fn scalar_partial(f: &dyn Fn(&Vec3) -> f64, p: &Vec3, a: usize) -> f64 {
    partial(&|q: &Vec3| [f(q)], p, a)[0]
}

pub type SymFn<'a> = &'a dyn Fn(&Vec3) -> Sym3;

fn sym_partial(f: SymFn, p: &Vec3, a: usize) -> Sym3 {
    Sym3(partial(&|q: &Vec3| f(q).0, p, a))
}

/// `Gamma^a_bc`, indexed `[a]` then symmetric `(b, c)`.
pub fn christoffel(g: SymFn, p: &Vec3) -> [Sym3; 3] {
    let gi = g(p).inverse().unwrap();
    let dg: [Sym3; 3] = core::array::from_fn(|c| sym_partial(g, p, c));
    core::array::from_fn(|a| {
        Sym3::from_fn(|b, c| {
            (0..3)
                .map(|d| 0.5 * gi.get(a, d) * (dg[b].get(c, d) + dg[c].get(b, d) - dg[d].get(b, c)))
                .sum()
        })
    })
}

pub fn laplacian(g: SymFn, u: &dyn Fn(&Vec3) -> f64, p: &Vec3) -> f64 {
    let gi = g(p).inverse().unwrap();
    let gam = christoffel(g, p);
    let mut s = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            let dab = scalar_partial(&|q: &Vec3| scalar_partial(u, q, b), p, a);
            let conn: f64 = (0..3).map(|e| gam[e].get(a, b) * scalar_partial(u, p, e)).sum();
            s += gi.get(a, b) * (dab - conn);
        }
    }
    s
}

/// `(div S)_b = g^{ac} nabla_a S_cb`.
pub fn divergence(g: SymFn, s: SymFn, p: &Vec3) -> Vec3 {
    let gi = g(p).inverse().unwrap();
    let gam = christoffel(g, p);
    let ds: [Sym3; 3] = core::array::from_fn(|a| sym_partial(s, p, a));
    let sv = s(p);
    core::array::from_fn(|b| {
        let mut v = 0.0;
        for a in 0..3 {
            for c in 0..3 {
                let mut cov = ds[a].get(c, b);
                for e in 0..3 {
                    cov -= gam[e].get(a, c) * sv.get(e, b) + gam[e].get(a, b) * sv.get(c, e);
                }
                v += gi.get(a, c) * cov;
            }
        }
        v
    })
}

/// Trace-free symmetrized covariant derivative of a vector field, lowered.
pub fn conformal_killing(g: SymFn, x: &dyn Fn(&Vec3) -> Vec3, p: &Vec3) -> Sym3 {
    let gv = g(p);
    let gam = christoffel(g, p);
    let xv = x(p);
    let dx: [Vec3; 3] = core::array::from_fn(|c| partial(x, p, c));
    let cov: [[f64; 3]; 3] = core::array::from_fn(|c| {
        core::array::from_fn(|e| dx[c][e] + (0..3).map(|k| gam[e].get(c, k) * xv[k]).sum::<f64>())
    });
    let div = cov[0][0] + cov[1][1] + cov[2][2];
    let low = |c: usize, d: usize| (0..3).map(|e| gv.get(d, e) * cov[c][e]).sum::<f64>();
    Sym3::from_fn(|c, d| 0.5 * (low(c, d) + low(d, c)) - div * gv.get(c, d) / 3.0)
}

/// `-(div D X)^sharp`.
pub fn vector_laplacian(g: SymFn, x: &dyn Fn(&Vec3) -> Vec3, p: &Vec3) -> Vec3 {
    let dx = |q: &Vec3| conformal_killing(g, x, q);
    let w = divergence(g, &dx, p);
    let v = g(p).inverse().unwrap().mul_vec(&w);
    [-v[0], -v[1], -v[2]]
}

/// Scalar curvature from Christoffel symbols of the closed form.
pub fn scalar_curvature(g: SymFn, p: &Vec3) -> f64 {
    let gi = g(p).inverse().unwrap();
    let gam = christoffel(g, p);
    let dgam: [[Sym3; 3]; 3] = core::array::from_fn(|d| {
        core::array::from_fn(|a| Sym3(partial(&|q: &Vec3| christoffel(g, q)[a].0, p, d)))
    });
    let mut r = 0.0;
    for b in 0..3 {
        for c in 0..3 {
            // Ric_bc = d_a G^a_bc - d_c G^a_ab + G^a_ae G^e_bc - G^a_ce G^e_ab
            let mut ric = 0.0;
            for a in 0..3 {
                ric += dgam[a][a].get(b, c) - dgam[c][a].get(a, b);
                for e in 0..3 {
                    ric += gam[a].get(a, e) * gam[e].get(b, c) - gam[a].get(c, e) * gam[e].get(a, b);
                }
            }
            r += gi.get(b, c) * ric;
        }
    }
    r
}

/// Smooth non-hyperbolic test metric `psi^4 y^-2 (delta + m)`.
pub fn test_metric(p: &Vec3) -> Sym3 {
    let bump = (-((p[0] - 1.0).powi(2) + p[1] * p[1] + p[2] * p[2])).exp();
    let psi = 1.0 + 0.2 * bump;
    let m = Sym3([0.3, 0.1, 0.0, -0.2, 0.05, 0.1]).scale(0.2 * bump);
    Sym3::diag(1.0).add(&m).scale(psi.powi(4) / (p[0] * p[0]))
}

pub fn test_scalar(p: &Vec3) -> f64 {
    (1.3 * p[1]).sin() * (0.7 * p[2]).cos() * p[0] * p[0] + 0.5 * p[0]
}

pub fn test_vector(p: &Vec3) -> Vec3 {
    [
        p[0] * (p[1] + 0.3).cos(),
        (0.8 * p[0]).sin() * p[2],
        p[0] * p[0] * (0.5 * p[1] - 0.2 * p[2]).exp(),
    ]
}

pub fn test_tensor(p: &Vec3) -> Sym3 {
    let a = (p[1] - 0.4 * p[2]).sin();
    let b = (p[0] * p[2]).cos();
    Sym3([a * p[0], b, 0.3 * p[1], p[0] * b, a * b, p[2] * p[2] - p[0]])
}

/// Least-squares slope of `log err` against `log h`.
pub fn order(hs: &[f64], errs: &[f64]) -> f64 {
    let n = hs.len() as f64;
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Deterministic uniform samples in a box.
pub fn sample_points(count: usize, lo: Vec3, hi: Vec3, seed: u64) -> Vec<Vec3> {
    use rand::{rngs::StdRng, Rng, SeedableRng};
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count)
        .map(|_| core::array::from_fn(|a| rng.random_range(lo[a]..hi[a])))
        .collect()
}
