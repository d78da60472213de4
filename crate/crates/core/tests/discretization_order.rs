mod common;

use ahglue_core::linalg::{Sym3, Vec3};
use ahglue_core::operators::{divergence_and_trace, laplacian, scalar_curvature, vector_laplacian_apply, OperatorContext};
use ahglue_core::{ChartGrid, Covariance, Field, MetricField};
use common::*;

const SPACINGS: [f64; 3] = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];

fn grid(h: f64) -> ChartGrid {
    ChartGrid::covering(0.5, 1.5, 0.5, h).unwrap()
}

/// Nodes of the coarsest grid inside `[0.75, 1.25] x [-0.25, 0.25]^2`, shared by all refinements.
fn probe_points() -> Vec<Vec3> {
    let g = grid(SPACINGS[0]);
    (0..g.len())
        .map(|n| g.point(n))
        .filter(|p| (p[0] - 1.0).abs() <= 0.25 + 1e-9 && p[1].abs() <= 0.25 + 1e-9 && p[2].abs() <= 0.25 + 1e-9)
        .collect()
}

fn node_of(g: &ChartGrid, p: &Vec3) -> usize {
    let i = ((p[0] - g.y_min) / g.h).round() as usize;
    let j = ((p[1] - g.x1_min()) / g.h).round() as usize;
    let k = ((p[2] - g.x2_min()) / g.h).round() as usize;
    g.index([i, j, k])
}

fn context(h: f64) -> OperatorContext {
    let g = grid(h);
    let metric = MetricField::new(Field::from_fn(g, Covariance::Sym2, |_, p| test_metric(&p))).unwrap();
    OperatorContext::new(&metric).unwrap()
}

fn observed_order(errors: &[f64]) -> f64 {
    order(&SPACINGS, errors)
}

fn errors_for(exact: &[Vec<f64>], computed: impl Fn(&OperatorContext, &[Vec3]) -> Vec<Vec<f64>>) -> Vec<f64> {
    let points = probe_points();
    SPACINGS
        .iter()
        .map(|&h| {
            let ctx = context(h);
            let got = computed(&ctx, &points);
            got.iter()
                .zip(exact)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max)
        })
        .collect()
}

#[test]
fn scalar_laplacian_is_second_order() {
    let points = probe_points();
    let exact: Vec<Vec<f64>> = points.iter().map(|p| vec![laplacian_ref(p)]).collect();
    let errs = errors_for(&exact, |ctx, pts| {
        let u = Field::from_fn(*ctx.grid(), Covariance::Scalar, |_, p| test_scalar(&p));
        let lap = laplacian(ctx, &u, 0).unwrap();
        pts.iter().map(|p| vec![*lap.at(node_of(ctx.grid(), p))]).collect()
    });
    let k = observed_order(&errs);
    assert!((1.8..=2.2).contains(&k), "order {k}, errors {errs:?}");
}

fn laplacian_ref(p: &Vec3) -> f64 {
    common::laplacian(&test_metric, &test_scalar, p)
}

#[test]
fn divergence_is_second_order() {
    let points = probe_points();
    let exact: Vec<Vec<f64>> = points.iter().map(|p| divergence(&test_metric, &test_tensor, p).to_vec()).collect();
    let errs = errors_for(&exact, |ctx, pts| {
        let s = Field::from_fn(*ctx.grid(), Covariance::Sym2, |_, p| test_tensor(&p));
        let (div, _) = divergence_and_trace(ctx, &s).unwrap();
        pts.iter().map(|p| div.at(node_of(ctx.grid(), p)).to_vec()).collect()
    });
    let k = observed_order(&errs);
    assert!((1.8..=2.2).contains(&k), "order {k}, errors {errs:?}");
}

#[test]
fn scalar_curvature_is_second_order() {
    let points = probe_points();
    let exact: Vec<Vec<f64>> = points.iter().map(|p| vec![common::scalar_curvature(&test_metric, p)]).collect();
    let errs = errors_for(&exact, |ctx, pts| {
        let r = scalar_curvature(ctx);
        pts.iter().map(|p| vec![*r.at(node_of(ctx.grid(), p))]).collect()
    });
    let k = observed_order(&errs);
    assert!((1.8..=2.2).contains(&k), "order {k}, errors {errs:?}");
}

#[test]
fn vector_laplacian_is_second_order() {
    let points = probe_points();
    let exact: Vec<Vec<f64>> =
        points.iter().map(|p| vector_laplacian(&test_metric, &test_vector, p).to_vec()).collect();
    let errs = errors_for(&exact, |ctx, pts| {
        let x = Field::from_fn(*ctx.grid(), Covariance::Vector, |_, p| test_vector(&p));
        let lx = vector_laplacian_apply(ctx, &x).unwrap();
        pts.iter().map(|p| lx.at(node_of(ctx.grid(), p)).to_vec()).collect()
    });
    let k = observed_order(&errs);
    assert!((1.8..=2.2).contains(&k), "order {k}, errors {errs:?}");
}

#[test]
fn conformal_scalar_curvature_law() {
    // R(psi^4 g) = psi^-5 (R(g) psi - 8 Lap_g psi) with g hyperbolic, R(g) = -6
    let psi = |p: &Vec3| 1.0 + 0.1 * (-((p[0] - 1.0).powi(2) + p[1] * p[1] + 2.0 * p[2] * p[2])).exp();
    let hyp = |p: &Vec3| Sym3::diag(1.0 / (p[0] * p[0]));
    let mut errs = Vec::new();
    for &h in &SPACINGS {
        let g = grid(h);
        let metric =
            MetricField::new(Field::from_fn(g, Covariance::Sym2, |_, p| hyp(&p).scale(psi(&p).powi(4)))).unwrap();
        let ctx = OperatorContext::new(&metric).unwrap();
        let r = scalar_curvature(&ctx);
        let err = probe_points()
            .iter()
            .map(|p| {
                let u = psi(p);
                let exact = (-6.0 * u - 8.0 * common::laplacian(&hyp, &psi, p)) / u.powi(5);
                (r.at(node_of(&g, p)) - exact).abs()
            })
            .fold(0.0, f64::max);
        errs.push(err);
    }
    let k = observed_order(&errs);
    assert!((1.8..=2.2).contains(&k), "order {k}, errors {errs:?}");
}

#[test]
fn metric_compatibility() {
    let h = SPACINGS[1];
    let ctx = context(h);
    let g = *ctx.grid();
    let metric = ctx.metric_field().unwrap();
    let (div, tr) = divergence_and_trace(&ctx, metric.field()).unwrap();
    for p in probe_points() {
        let n = node_of(&g, &p);
        assert!((tr.at(n) - 3.0).abs() < 1e-12);
        assert!(div.at(n).iter().all(|v| v.abs() < 10.0 * h * h), "{:?}", div.at(n));
    }
}

#[test]
fn operators_are_linear() {
    let ctx = context(0.125);
    let g = *ctx.grid();
    let x = Field::from_fn(g, Covariance::Vector, |_, p| test_vector(&p));
    let y = Field::from_fn(g, Covariance::Vector, |_, p| [p[1] * p[2], p[0].cos(), p[1] - p[0] * p[2]]);
    let combo = x.scaled(2.5).add(&y.scaled(-0.75)).unwrap();
    let lhs = vector_laplacian_apply(&ctx, &combo).unwrap();
    let rhs = vector_laplacian_apply(&ctx, &x).unwrap().scaled(2.5).add(&vector_laplacian_apply(&ctx, &y).unwrap().scaled(-0.75)).unwrap();
    let scale = lhs.max_abs(None).max(1.0);
    assert!(lhs.sub(&rhs).unwrap().max_abs(None) < 1e-12 * scale);

    let s = Field::from_fn(g, Covariance::Sym2, |_, p| test_tensor(&p));
    let (d1, _) = divergence_and_trace(&ctx, &s.scaled(-3.0)).unwrap();
    let (d0, _) = divergence_and_trace(&ctx, &s).unwrap();
    assert!(d1.sub(&d0.scaled(-3.0)).unwrap().max_abs(None) < 1e-11 * d0.max_abs(None).max(1.0));
}
