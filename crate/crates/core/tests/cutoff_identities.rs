use ahglue_core::cutoff::{
    build_chi, build_f, build_f_default, build_phi, build_sigma, chi_eps, concave_rescale, default_b, SmoothProfile,
};
use proptest::prelude::*;

fn log_points(count: usize, lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(move |k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
}

#[test]
fn phi_partition_of_unity() {
    let phi = build_phi();
    for r in log_points(10_000, 1e-3, 1e3) {
        assert!((phi.value(r) + phi.value(1.0 / r) - 1.0).abs() <= 1e-12, "r = {r}");
    }
    assert_eq!(phi.value(3.0), 1.0);
    assert_eq!(phi.value(0.25), 0.0);
    assert!((phi.value(1.0) - 0.5).abs() < 1e-15);
}

#[test]
fn phi_is_nondecreasing() {
    let phi = build_phi();
    for r in log_points(5_000, 0.3, 3.0) {
        assert!(phi.d1(r) >= -1e-14, "phi' < 0 at {r}");
    }
}

#[test]
fn f_inversion_law_and_margin() {
    let f = build_f_default();
    for r in log_points(10_000, 1e-3, 1e3) {
        let lhs = f.value(1.0 / r);
        let rhs = r * r * f.value(r);
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0), "r = {r}: {lhs} vs {rhs}");
        assert!(f.laplace_margin(r).abs() <= 0.5 + 1e-6, "margin at {r}");
    }
}

#[test]
fn f_closed_forms() {
    let f = build_f_default();
    let b = f.b().unwrap();
    assert_eq!(b, default_b());
    assert!(b >= 4.0);
    assert_eq!(f.value(b + 1.0), 1.0);
    assert!((f.value(1.0 / (b + 1.0)) - (b + 1.0).powi(2)).abs() < 1e-10);
    assert!((f.value(1.0) - 2.0).abs() < 1e-14);
    for r in log_points(1_000, 2.0 / b, b / 2.0) {
        assert!((f.value(r) - (1.0 + 1.0 / (r * r))).abs() < 1e-12);
    }
    for r in log_points(2_000, 1e-2, 1e2) {
        assert!(f.value(r) >= 1.0f64.max(1.0 / (r * r)) - 1e-12);
    }
}

#[test]
fn f_log_derivative_bound() {
    let f = build_f_default();
    let c = log_points(10_000, 1e-3, 1e3).map(|r| r * f.d1(r).abs() / f.value(r)).fold(0.0, f64::max);
    assert!(c.is_finite() && c < 3.0, "sup r|F'|/F = {c}");
}

#[test]
fn f_scale_validation() {
    assert!(build_f(1.5).is_err());
    assert!(build_f(2.0).is_err());
    assert!(build_f(default_b() * 2.0).is_ok());
}

#[test]
fn chi_support() {
    let chi = build_chi();
    assert_eq!(chi_eps(&chi, 0.1, &[0.0, 0.0, 0.0]), 0.0);
    assert_eq!(chi.value(5.0), 1.0);
    assert_eq!(chi.value(2.0), 0.0);
    for eps in [0.05, 0.1, 0.2] {
        let r = (3.0f64 * eps).sqrt() * 1.01;
        assert_eq!(chi_eps(&chi, eps, &[r, 0.0, 0.0]), 1.0);
        assert_eq!(chi_eps(&chi, eps, &[0.0, r * 0.6, r * 0.8]), 1.0);
    }
}

#[test]
fn sigma_is_concave_rescale() {
    let delta = 0.4;
    let s = build_sigma(delta).unwrap();
    assert!((s.value(delta / 4.0) - delta / 4.0).abs() < 1e-15);
    assert!((s.value(2.0 * delta) - 0.75 * delta).abs() < 1e-15);
    for k in 0..=4_000 {
        let x = 1.5 * delta * k as f64 / 4_000.0;
        assert!(s.d2(x) <= 1e-10, "sigma'' > 0 at {x}");
        assert!(s.d1(x) >= 0.0);
    }
    let v = concave_rescale(&[0.1, 0.8], delta).unwrap();
    assert!((v[0] - 0.1).abs() < 1e-15 && (v[1] - 0.3).abs() < 1e-15);
    assert!(build_sigma(0.0).is_err());
}

fn derivatives_agree(p: &SmoothProfile, r: f64) -> bool {
    let h = 1e-5 * r;
    let d1 = (p.value(r + h) - p.value(r - h)) / (2.0 * h);
    let d2 = (p.d1(r + h) - p.d1(r - h)) / (2.0 * h);
    (d1 - p.d1(r)).abs() <= 1e-6 * p.d1(r).abs().max(1.0) && (d2 - p.d2(r)).abs() <= 1e-6 * p.d2(r).abs().max(1.0)
}

proptest! {
    #[test]
    fn profile_derivatives_match_differences(r in 0.05f64..20.0) {
        prop_assert!(derivatives_agree(&build_phi(), r));
        prop_assert!(derivatives_agree(&build_f_default(), r));
        prop_assert!(derivatives_agree(&build_chi(), r));
        prop_assert!(derivatives_agree(&build_sigma(1.0).unwrap(), r));
    }

    #[test]
    fn f_dominates_both_branches(r in 1e-3f64..1e3) {
        let f = build_f_default();
        prop_assert!(f.value(r) >= 1.0 - 1e-12 && f.value(r) * r * r >= 1.0 - 1e-12);
    }
}
