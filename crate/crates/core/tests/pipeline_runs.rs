use ahglue_core::pipeline::{epsilon_sweep, run_glue_pipeline, sweep_spacing, GlueReport, PipelineConfig};
use ahglue_core::seed::{analytic_seed_data, AcSeedSpec};
use ahglue_core::splice::{SeedData, SpliceConfig};

fn config(eps: f64, nodes: usize) -> PipelineConfig {
    let cap = 4.0;
    let h = sweep_spacing(&[eps], cap, nodes).unwrap();
    let mut c = PipelineConfig::new(SpliceConfig::new(eps, h));
    c.splice.r_out = Some(cap.min(1.0 / eps));
    c
}

fn assert_finite(r: &GlueReport) {
    let values = [
        r.div_mu,
        r.div_mu_closed_form,
        r.nu_minus_mu_c0,
        r.nu_minus_mu_c1,
        r.york_trace,
        r.lichnerowicz_at_one,
        r.lichnerowicz_residual,
        r.psi_minus_one,
        r.psi_minus_one_c2,
        r.f_min,
        r.f_excess,
        r.laplace_rho_max,
        r.momentum_residual,
        r.hamiltonian_residual,
        r.trace_deviation,
    ];
    assert!(values.iter().all(|v| v.is_finite()), "{values:?}");
}

#[test]
fn exact_hyperbolic_glues_to_itself() {
    let run = run_glue_pipeline(&SeedData::exact_hyperbolic(), &config(0.2, 40)).unwrap();
    let r = &run.report;
    assert_finite(r);
    assert_eq!(r.div_mu, 0.0);
    assert_eq!(r.div_mu_closed_form, 0.0);
    assert_eq!(r.nu_minus_mu_c1, 0.0);
    assert_eq!(run.york.x.max_abs(None), 0.0);
    assert!(r.york_divergence_ratio.is_none());
    assert!(r.psi_minus_one <= 1e-8, "{}", r.psi_minus_one);
    // both floors are roundoff here, so compare against an absolute level
    assert!(r.momentum_residual <= 1e-10 && r.momentum_floor <= 1e-10);
    assert!(r.hamiltonian_residual <= 1e-10 && r.hamiltonian_floor <= 1e-10);
    assert!(r.trace_deviation <= 1e-8);
    assert!(r.f_min >= 2.5);
}

#[test]
fn analytic_seed_run_meets_solver_targets() {
    let seeds = analytic_seed_data(&AcSeedSpec::default()).unwrap();
    let cfg = config(0.2, 40);
    let run = run_glue_pipeline(&seeds, &cfg).unwrap();
    let r = &run.report;
    assert_finite(r);
    assert!(r.div_mu > 0.0 && r.nu_minus_mu_c1 > 0.0);
    assert!(r.york_divergence_ratio.unwrap() <= 10.0 * cfg.solve.krylov.tolerance);
    assert!(r.york_trace <= 1e-10);
    assert!(r.picard_steps <= 20);
    assert!(r.lichnerowicz_residual <= 1e-8);
    assert!(r.trace_deviation <= 1e-8);
    assert!(r.f_min >= 2.5);
    assert!(r.laplace_rho_max <= 10.0 * r.h * r.h);
    let psi_min = run.lichnerowicz.psi.data().iter().copied().fold(f64::INFINITY, f64::min);
    assert!(psi_min > 0.0);
}

#[test]
fn rejects_bad_parameters() {
    let seeds = SeedData::exact_hyperbolic();
    assert!(run_glue_pipeline(&seeds, &PipelineConfig::new(SpliceConfig::new(1.5, 0.2))).is_err());
    assert!(run_glue_pipeline(&seeds, &PipelineConfig::new(SpliceConfig::new(0.2, 5.0))).is_err());
}

#[test]
fn sweep_is_deterministic() {
    let seeds = analytic_seed_data(&AcSeedSpec::default()).unwrap();
    let eps = [0.4, 0.35, 0.3, 0.25];
    let h = sweep_spacing(&eps, 2.5, 24).unwrap();
    let mut base = PipelineConfig::new(SpliceConfig::new(eps[0], h));
    base.splice.r_out = Some(2.5);
    let a = epsilon_sweep(&seeds, &base, &eps, |_, _| {}).unwrap();
    let b = epsilon_sweep(&seeds, &base, &eps, |_, _| {}).unwrap();
    assert_eq!(a.reports().len(), 4);
    assert_eq!(a.table, b.table);
    let ra: Vec<_> = a.reports().into_iter().cloned().collect();
    let rb: Vec<_> = b.reports().into_iter().cloned().collect();
    assert_eq!(ra, rb);
}
