//! Cutoff and interpolation profiles used by the splice.
//!
//! All bumps are built from the quintic smoothstep `S(t) = 6t^5 - 15t^4 + 10t^3`,
//! which is C^2 across its break points.

use crate::error::{GlueError, Result};
use crate::prelude::*;
use core::f64::consts::{LN_2, SQRT_2};
use serde::{Deserialize, Serialize};

/// Value and first two derivatives.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Quintic smoothstep clamped to [0, 1].
pub fn smoothstep(t: f64) -> Jet {
    if t <= 0.0 {
        return Jet { v: 0.0, d1: 0.0, d2: 0.0 };
    }
    if t >= 1.0 {
        return Jet { v: 1.0, d1: 0.0, d2: 0.0 };
    }
    let t2 = t * t;
    Jet {
        v: t2 * t * (10.0 + t * (-15.0 + 6.0 * t)),
        d1: 30.0 * t2 * (1.0 - t) * (1.0 - t),
        d2: 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ProfileKind {
    /// Neck partition of unity `phi`.
    Phi,
    /// Defining-function interpolant `F` with its scale `b`.
    F { b: f64 },
    /// Base cutoff `chi`, zero below 2 and one above 3.
    Chi,
    /// Concave rescale `sigma` with threshold `delta`.
    Sigma { delta: f64 },
}

/// A closed-form profile on `(0, inf)` with two derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothProfile {
    pub kind: ProfileKind,
    /// Interval outside which the profile is given by a simple closed form.
    pub transition: (f64, f64),
    /// `sup |3 s psi0' + s^2 psi0''|` for the bump behind `F`; zero otherwise.
    pub bump_constant: f64,
}

/// Half of the neck cutoff before symmetrisation: 1/2 for `r <= 1/sqrt 2`, 0 for `r >= sqrt 2`.
fn phi_base(r: f64) -> Jet {
    // t runs over [0, 1] as r runs over [1/sqrt2, sqrt2].
    let t = r.ln() / LN_2 + 0.5;
    let s = smoothstep(t);
    let dt = 1.0 / (r * LN_2);
    let d2t = -1.0 / (r * r * LN_2);
    Jet { v: 0.5 * (1.0 - s.v), d1: -0.5 * s.d1 * dt, d2: -0.5 * (s.d2 * dt * dt + s.d1 * d2t) }
}

/// Unit bump: 1 for `s <= 1`, 0 for `s >= 2`.
fn unit_bump(s: f64) -> Jet {
    let j = smoothstep(s - 1.0);
    Jet { v: 1.0 - j.v, d1: -j.d1, d2: -j.d2 }
}

/// Jet of `u(1/r)` from the jet of `u` at `1/r`.
fn compose_inverse(u: Jet, r: f64) -> Jet {
    let r2 = r * r;
    Jet { v: u.v, d1: -u.d1 / r2, d2: u.d2 / (r2 * r2) + 2.0 * u.d1 / (r2 * r) }
}

/// `sup_{s in [1,2]} |3 s psi0'(s) + s^2 psi0''(s)|`, evaluated on a dense sample.
pub fn bump_constant() -> f64 {
    let n = 200_000;
    (0..=n)
        .map(|k| {
            let s = 1.0 + k as f64 / n as f64;
            let j = unit_bump(s);
            (3.0 * s * j.d1 + s * s * j.d2).abs()
        })
        .fold(0.0, f64::max)
}

/// Smallest admissible `b >= 4` with `(2/b)^2 <= 1/(2C)`.
pub fn default_b() -> f64 {
    let c = bump_constant();
    // Small margin so the sampled supremum is not undercut between samples.
    (2.0 * (2.0 * c * 1.0001).sqrt()).max(4.0)
}

pub fn build_phi() -> SmoothProfile {
    SmoothProfile { kind: ProfileKind::Phi, transition: (1.0 / SQRT_2, SQRT_2), bump_constant: 0.0 }
}

pub fn build_f(b: f64) -> Result<SmoothProfile> {
    if !(b >= 2.0) || !b.is_finite() {
        return Err(GlueError::Parameter(format!("F scale b = {b} must be at least 2")));
    }
    let c = bump_constant();
    if (2.0 / b).powi(2) > 1.0 / (2.0 * c) {
        return Err(GlueError::Parameter(format!(
            "b = {b} too small for the Laplacian margin, need at least {:.4}",
            2.0 * (2.0 * c).sqrt()
        )));
    }
    Ok(SmoothProfile { kind: ProfileKind::F { b }, transition: (1.0 / b, b), bump_constant: c })
}

/// `F` with the default `b`.
pub fn build_f_default() -> SmoothProfile {
    build_f(default_b()).expect("default b is admissible")
}

pub fn build_chi() -> SmoothProfile {
    SmoothProfile { kind: ProfileKind::Chi, transition: (2.0, 3.0), bump_constant: 0.0 }
}

pub fn build_sigma(delta: f64) -> Result<SmoothProfile> {
    if !(delta > 0.0) {
        return Err(GlueError::Parameter(format!("rescale threshold {delta} must be positive")));
    }
    Ok(SmoothProfile { kind: ProfileKind::Sigma { delta }, transition: (0.5 * delta, delta), bump_constant: 0.0 })
}

impl SmoothProfile {
    pub fn eval(&self, r: f64) -> Jet {
        match self.kind {
            ProfileKind::Phi => {
                let a = phi_base(r);
                let b = compose_inverse(phi_base(1.0 / r), r);
                Jet { v: 0.5 - a.v + b.v, d1: -a.d1 + b.d1, d2: -a.d2 + b.d2 }
            }
            ProfileKind::F { b } => {
                // F = 1 + r^-2 - psi(r) - r^-2 psi(1/r), psi(r) = psi0(b r).
                let r2 = r * r;
                let p = unit_bump(b * r);
                let p = Jet { v: p.v, d1: b * p.d1, d2: b * b * p.d2 };
                let q = compose_inverse(
                    {
                        let j = unit_bump(b / r);
                        Jet { v: j.v, d1: b * j.d1, d2: b * b * j.d2 }
                    },
                    r,
                );
                let inv2 = Jet { v: 1.0 / r2, d1: -2.0 / (r2 * r), d2: 6.0 / (r2 * r2) };
                // product inv2 * q
                let pq = Jet {
                    v: inv2.v * q.v,
                    d1: inv2.d1 * q.v + inv2.v * q.d1,
                    d2: inv2.d2 * q.v + 2.0 * inv2.d1 * q.d1 + inv2.v * q.d2,
                };
                Jet { v: 1.0 + inv2.v - p.v - pq.v, d1: inv2.d1 - p.d1 - pq.d1, d2: inv2.d2 - p.d2 - pq.d2 }
            }
            ProfileKind::Chi => smoothstep(r - 2.0),
            ProfileKind::Sigma { delta } => {
                let half = 0.5 * delta;
                if r <= half {
                    return Jet { v: r, d1: 1.0, d2: 0.0 };
                }
                if r >= delta {
                    return Jet { v: 0.75 * delta, d1: 0.0, d2: 0.0 };
                }
                let u = (r - half) / half;
                let s = smoothstep(u);
                let integral = u * u * u * u * (2.5 + u * (-3.0 + u));
                Jet { v: half + half * (u - integral), d1: 1.0 - s.v, d2: -s.d1 / half }
            }
        }
    }

    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        self.eval(r).v
    }

    #[inline]
    pub fn d1(&self, r: f64) -> f64 {
        self.eval(r).d1
    }

    #[inline]
    pub fn d2(&self, r: f64) -> f64 {
        self.eval(r).d2
    }

    /// The `b` parameter of an `F` profile.
    pub fn b(&self) -> Option<f64> {
        match self.kind {
            ProfileKind::F { b } => Some(b),
            _ => None,
        }
    }

    /// `(3 r F' + r^2 F'') / F`, the quantity controlling superharmonicity of `y F`.
    pub fn laplace_margin(&self, r: f64) -> f64 {
        let j = self.eval(r);
        (3.0 * r * j.d1 + r * r * j.d2) / j.v
    }
}

/// `chi_eps` at a background-chart point `(rho, theta1, theta2)`.
pub fn chi_eps(chi: &SmoothProfile, eps: f64, p: &[f64; 3]) -> f64 {
    let r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    if r2 >= 3.0 * eps {
        return 1.0;
    }
    chi.value(chi_argument(eps, p))
}

/// Argument `rho^2/eps^2 + |theta|^2/eps` of the cutoff.
#[inline]
pub fn chi_argument(eps: f64, p: &[f64; 3]) -> f64 {
    p[0] * p[0] / (eps * eps) + (p[1] * p[1] + p[2] * p[2]) / eps
}

/// Apply the concave rescale nodewise.
pub fn concave_rescale(values: &[f64], delta: f64) -> Result<Vec<f64>> {
    let s = build_sigma(delta)?;
    Ok(values.iter().map(|&x| s.value(x)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_derivatives(p: &SmoothProfile, r: f64) {
        let h = 1e-5 * r.max(1e-3);
        let j = p.eval(r);
        let d1 = (p.value(r + h) - p.value(r - h)) / (2.0 * h);
        let d2 = (p.d1(r + h) - p.d1(r - h)) / (2.0 * h);
        let scale1 = j.d1.abs().max(1.0);
        let scale2 = j.d2.abs().max(1.0);
        assert!((d1 - j.d1).abs() / scale1 < 1e-6, "d1 at {r}: {d1} vs {}", j.d1);
        assert!((d2 - j.d2).abs() / scale2 < 1e-6, "d2 at {r}: {d2} vs {}", j.d2);
    }

    #[test]
    fn phi_values() {
        let phi = build_phi();
        assert_eq!(phi.value(3.0), 1.0);
        assert!((phi.value(1.0) - 0.5).abs() < 1e-15);
        assert_eq!(phi.value(0.25), 0.0);
        for r in [0.6, 0.8, 1.1, 1.3] {
            check_derivatives(&phi, r);
        }
    }

    #[test]
    fn f_values() {
        let f = build_f_default();
        let b = f.b().unwrap();
        assert!(b >= 4.0);
        assert_eq!(f.value(b + 1.0), 1.0);
        assert!((f.value(1.0 / (b + 1.0)) - (b + 1.0).powi(2)).abs() < 1e-9);
        assert!((f.value(1.0) - 2.0).abs() < 1e-15);
        for r in [0.5 / b, 1.3 / b, 0.9, 0.7 * b, 0.95 * b] {
            check_derivatives(&f, r);
        }
    }

    #[test]
    fn f_rejects_small_b() {
        assert!(build_f(1.5).is_err());
        assert!(build_f(2.0).is_err());
    }

    #[test]
    fn chi_values() {
        let chi = build_chi();
        assert_eq!(chi_eps(&chi, 0.1, &[0.0, 0.0, 0.0]), 0.0);
        assert_eq!(chi.value(5.0), 1.0);
        assert_eq!(chi_eps(&chi, 0.1, &[0.5, 0.2, 0.1]), 1.0);
        check_derivatives(&chi, 2.4);
    }

    #[test]
    fn sigma_values() {
        let delta = 0.4;
        let s = build_sigma(delta).unwrap();
        assert_eq!(s.value(delta / 4.0), delta / 4.0);
        assert!((s.value(2.0 * delta) - 0.75 * delta).abs() < 1e-15);
        assert!((s.value(delta * (1.0 - 1e-12)) - 0.75 * delta).abs() < 1e-10);
        for k in 1..1000 {
            let x = 1.2 * delta * k as f64 / 1000.0;
            assert!(s.d2(x) <= 1e-10);
            assert!(s.d1(x) >= 0.0);
        }
        check_derivatives(&s, 0.7 * delta);
    }
}
