mod common;

use ahglue_core::boundary::{NodeRole, SolveDomain};
use ahglue_core::krylov::KrylovSettings;
use ahglue_core::linalg::Vec3;
use ahglue_core::operators::{conformal_killing_apply, vector_laplacian_apply, OperatorContext};
use ahglue_core::solve::{assemble_and_solve, york_project, EllipticOperator, SolveSettings};
use ahglue_core::{ChartGrid, Covariance, Field, MetricField, VectorField};
use common::{test_metric, test_scalar, test_vector};

fn setup(hyperbolic: bool) -> (OperatorContext, SolveDomain) {
    let grid = ChartGrid::covering(0.5, 1.5, 0.5, 1.0 / 16.0).unwrap();
    let metric = if hyperbolic {
        MetricField::hyperbolic(grid)
    } else {
        MetricField::new(Field::from_fn(grid, Covariance::Sym2, |_, p| test_metric(&p))).unwrap()
    };
    (OperatorContext::new(&metric).unwrap(), SolveDomain::box_interior(grid))
}

fn settings() -> KrylovSettings {
    KrylovSettings { tolerance: 1e-13, ..KrylovSettings::default() }
}

fn sup(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn linearized_lichnerowicz_round_trip() {
    let (ctx, domain) = setup(false);
    let grid = *ctx.grid();
    let exact: Vec<f64> = (0..grid.len()).map(|n| test_scalar(&grid.point(n))).collect();
    let f: Vec<f64> = (0..grid.len()).map(|n| 3.0 + grid.point(n)[1].powi(2)).collect();
    let rhs: Vec<f64> = (0..grid.len())
        .map(|n| match domain.role(n) {
            NodeRole::Active => ctx.laplacian_at(&exact, n, 0) - f[n] * exact[n],
            _ => exact[n],
        })
        .collect();
    let (u, report) =
        assemble_and_solve(&ctx, &domain, EllipticOperator::LinearizedLichnerowicz { f: &f }, &rhs, None, None, &settings())
            .unwrap();
    let err = sup(u.iter().zip(&exact).map(|(a, b)| a - b));
    assert!(err <= 1e-8 * sup(exact.iter().copied()), "error {err}, {report:?}");
}

#[test]
fn vector_laplacian_round_trip() {
    let (ctx, domain) = setup(false);
    let grid = *ctx.grid();
    let exact: VectorField = Field::from_fn(grid, Covariance::Vector, |_, p| test_vector(&p));
    let lx = vector_laplacian_apply(&ctx, &exact).unwrap();
    let rhs: Vec<f64> = (0..grid.len())
        .flat_map(|n| match domain.role(n) {
            NodeRole::Active => *lx.at(n),
            _ => *exact.at(n),
        })
        .collect();
    let (x, report) =
        assemble_and_solve(&ctx, &domain, EllipticOperator::VectorLaplacian, &rhs, None, None, &settings()).unwrap();
    let flat: Vec<f64> = exact.data().iter().flatten().copied().collect();
    let err = sup(x.iter().zip(&flat).map(|(a, b)| a - b));
    assert!(err <= 1e-8 * sup(flat.iter().copied()), "error {err}, {report:?}");
}

/// Smooth bump supported in the ball of radius 0.35 about `(1, 0, 0)`.
fn bump_vector(p: &Vec3) -> Vec3 {
    let s2 = ((p[0] - 1.0).powi(2) + p[1] * p[1] + p[2] * p[2]) / (0.35 * 0.35);
    if s2 >= 1.0 {
        return [0.0; 3];
    }
    let w = (1.0 - s2).powi(4);
    [w * p[1], w * (0.5 + p[2]), -w * p[0] * p[1]]
}

#[test]
fn york_projection_removes_a_pure_gauge_term() {
    for hyperbolic in [true, false] {
        let (ctx, domain) = setup(hyperbolic);
        let grid = *ctx.grid();
        let x_star: VectorField = Field::from_fn(grid, Covariance::Vector, |_, p| bump_vector(&p));
        let mu = conformal_killing_apply(&ctx, &x_star).unwrap();
        let rho = Field::from_fn(grid, Covariance::Scalar, |_, p| p[0]);
        let solve = SolveSettings { krylov: settings(), ..SolveSettings::default() };
        let york = york_project(&ctx, &domain, &mu, &rho, &solve).unwrap();
        let scale = sup(x_star.data().iter().flatten().copied());
        let err = sup(york.x.data().iter().zip(x_star.data()).flat_map(|(a, b)| (0..3).map(move |c| a[c] + b[c])));
        assert!(err <= 1e-8 * scale, "potential error {err}");
        let nu = sup(domain.active().iter().map(|&n| york.nu.at(n).max_abs()));
        assert!(nu <= 1e-8 * mu.max_abs(None), "residual tensor {nu}");
        assert!(york.trace <= 1e-12);
        assert!(york.div_nu <= 1e-9 * york.div_mu);
    }
}

#[test]
fn york_projection_of_zero_is_zero() {
    let (ctx, domain) = setup(true);
    let grid = *ctx.grid();
    let mu = Field::zeros(grid, Covariance::Sym2);
    let rho = Field::from_fn(grid, Covariance::Scalar, |_, p| p[0]);
    let york = york_project(&ctx, &domain, &mu, &rho, &SolveSettings::default()).unwrap();
    assert_eq!(york.x.max_abs(None), 0.0);
    assert_eq!(york.nu.max_abs(None), 0.0);
    assert!(york.diagnostics.linear.is_empty());
}
