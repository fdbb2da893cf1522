use std::sync::Arc;

use accel::certify::check_potential;
use accel::oracles::*;
use accel::prox_outer::*;
use accel::trace::InnerKind;
use accel::{Error, Tolerance};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

fn start(d: usize, seed: u64) -> Vector {
    Vector::from_fn(d, |i, _| (((i as u64 + 5) * 23 + seed * 7) % 19) as f64 / 6.0 - 1.5)
}

fn r0_sq(f: &dyn Objective, x0: &Vector) -> f64 {
    (x0 - f.optimum().unwrap().x).norm_squared()
}

#[test]
fn ppa_needs_a_prox() {
    let f = make_linear(v(&[1.0, 2.0]), 1.0).unwrap();
    assert!(matches!(ppa(&f, &Steps::Constant(1.0), &v(&[0.0, 0.0]), 3), Err(Error::Unsupported(_))));
}

#[test]
fn ppa_bound_every_k_and_stationary() {
    let f = make_quadratic(&[1.0, 10.0], Vector::zeros(2)).unwrap();
    let x0 = v(&[1.0, 1.0]);
    for (steps, mu) in [(Steps::Constant(1.0), 0.0), (Steps::Geometric { lambda0: 0.5, ratio: 1.3 }, 1.0)] {
        let t = ppa(&f, &steps, &x0, 25).unwrap();
        for k in 1..=25 {
            // the μ = 0 bound holds as well, only weaker
            assert!(t.records[k].f_gap.unwrap() <= ppa_bound(2.0, &steps, mu, k) * (1.0 + 1e-12));
        }
    }
    let z = Vector::zeros(2);
    assert!(ppa(&f, &Steps::Constant(3.0), &z, 5).unwrap().records.iter().all(|r| r.point == z));
    let t = accel_inexact_ppa(&f, &mut ExactProxSolver, &Steps::Constant(1.0), 0.5, &z, 5, 0.0).unwrap();
    assert!(t.records.iter().all(|r| r.point.norm() < 1e-15));
}

#[test]
fn exact_solver_constant_steps() {
    let f = random_quadratic(6, 0.001, 1.0, 4).unwrap();
    let x0 = start(6, 4);
    let r = r0_sq(&f, &x0);
    for lambda in [0.5, 2.0, 10.0] {
        let steps = Steps::Constant(lambda);
        let t = accel_inexact_ppa(&f, &mut ExactProxSolver, &steps, 0.0, &x0, 30, 0.0).unwrap();
        for n in 1..=30 {
            let b = 2.0 * r / ((n * n) as f64 * lambda);
            assert!((accel_ppa_bound(r, &steps, 0.0, n) - b).abs() <= 1e-12 * b);
            assert!(t.records[n].f_gap.unwrap() <= b * (1.0 + 1e-9));
        }
    }
}

#[test]
fn geometric_steps_give_geometric_bound() {
    let steps = Steps::Geometric { lambda0: 0.1, ratio: 4.0 };
    for n in 1..20 {
        let s: f64 = (0..n).map(|i| steps.at(i).sqrt()).sum();
        let closed = 0.1 * (2f64.powi(n as i32) - 1.0).powi(2);
        assert!((s * s - closed).abs() <= 1e-10 * closed);
    }
    let f = random_quadratic(5, 0.01, 1.0, 1).unwrap();
    let x0 = start(5, 1);
    let r = r0_sq(&f, &x0);
    let t = accel_inexact_ppa(&f, &mut ExactProxSolver, &steps, 1.0, &x0, 12, 0.0).unwrap();
    for n in 1..=12 {
        assert!(t.records[n].f_gap.unwrap() <= accel_ppa_bound(r, &steps, 0.0, n) * (1.0 + 1e-9) + 1e-15);
    }
    assert!(accel_ppa_bound(1.0, &steps, 0.0, 12) <= 2.0 / (0.1 * 4095f64.powi(2)) * (1.0 + 1e-12));
}

#[test]
fn delta_range_is_enforced() {
    let f = random_quadratic(3, 0.1, 1.0, 0).unwrap();
    let x0 = start(3, 0);
    let r = accel_inexact_ppa(&f, &mut ExactProxSolver, &Steps::Constant(1.0), 1.01, &x0, 3, 0.0);
    assert!(matches!(r, Err(Error::InvalidArgument(_))));
    assert!(accel_inexact_ppa(&f, &mut ExactProxSolver, &Steps::Constant(1.0), 1.04, &x0, 3, 0.1).is_ok());
    let r = accel_inexact_ppa(&f, &mut ExactProxSolver, &Steps::Constant(1.0), 1.05, &x0, 3, 0.1);
    assert!(matches!(r, Err(Error::InvalidArgument(_))));
}

#[test]
fn inner_solver_failure_carries_partial_trace() {
    let f = random_quadratic(4, 0.01, 1.0, 2).unwrap();
    let x0 = start(4, 2);
    // one explicit step at λL = 50 cannot meet δ = 0.1
    let r = accel_inexact_ppa(&f, &mut GradientStepSolver { step_fraction: 1.0 }, &Steps::Constant(50.0), 0.1, &x0, 5, 0.0);
    match r {
        Err(Error::InnerSolve { k, partial, .. }) => assert_eq!(partial.records.len(), k + 1),
        other => panic!("expected an inner-solve error, got {other:?}"),
    }
}

#[test]
fn catalyst_burden_example() {
    let spec = InnerSolverSpec::for_subproblem(InnerKind::Gd, 1.0, 1.0);
    assert_eq!((spec.c_m, spec.tau_m), (1.0, 0.5));
    let b = spec.burden(1.0, 1.0);
    assert!((b - (3f64.ln() / 2f64.ln() + 1.0)).abs() < 1e-15);
    assert!((b - 2.585).abs() < 1e-3);
}

#[test]
fn catalyst_inner_runs_respect_the_burden() {
    let f = make_quadratic(&[1.0, 10.0], Vector::zeros(2)).unwrap();
    let run = catalyst(&f, InnerKind::Gd, 1.0, 300, CatalystMode::Convex, &v(&[1.0, -1.0])).unwrap();
    let c = &run.counters;
    let cap = c.burden.ceil() as u64;
    assert!(c.n_inner.iter().all(|&n| n <= cap), "{:?} vs {}", c.n_inner, c.burden);
    assert!(c.n_outer > 0);
}

#[test]
fn catalyst_warm_start_at_the_prox_point_stops_at_once() {
    let f = random_quadratic(4, 0.1, 1.0, 9).unwrap();
    let xs = f.optimum().unwrap().x;
    let run = catalyst(&f, InnerKind::Gd, 1.0, 100, CatalystMode::Convex, &xs).unwrap();
    assert_eq!(run.counters.n_inner, vec![0]);
    assert_eq!(run.trace.meta["stationary"], 1.0);
}

#[test]
fn lambda_tuning_helpers() {
    assert_eq!(lambda_gd_suboptimal(1.0, 0.25).unwrap(), 2.0);
    assert!((lambda_gd_optimal(1.0, 0.2).unwrap() - 5.0).abs() < 1e-12);
    assert!(lambda_gd_suboptimal(1.0, 0.5).is_err());
    assert!(lambda_gd_optimal(1.0, 0.4).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn accelerated_potential_and_certificates(seed in 0u64..10_000, d in 2usize..8, lambda in 0.1f64..20.0, delta_frac in 0.0f64..1.0, strong in any::<bool>()) {
        let f = random_quadratic(d, 0.02, 1.0, seed).unwrap();
        let mu = if strong { 0.02 } else { 0.0 };
        let delta = delta_frac * if strong { max_delta(lambda, mu) } else { 1.0 };
        let x0 = start(d, seed);
        let steps = Steps::Constant(lambda);
        let t = accel_inexact_ppa(&f, &mut GdSubproblemSolver { max_iters: 100_000 }, &steps, delta, &x0, 25, mu).unwrap();
        let cp = CompositeProblem::smooth(Arc::new(f.clone()));
        let r = check_potential(&t, &cp, Tolerance::default()).unwrap();
        prop_assert!(r.passed(), "{:?}", r.worst());
        let b = accel_ppa_bound(r0_sq(&f, &x0), &steps, mu, 25);
        prop_assert!(t.records[25].f_gap.unwrap() <= b * (1.0 + 1e-9) + 1e-14);
        for k in 1..=25 {
            let st = &t.records[k].state;
            let (x1, y) = (st.x.as_ref().unwrap(), st.y.as_ref().unwrap());
            let cert = InexactProxCertificate::new(x1.clone(), y.clone(), lambda, f.gradient(x1), delta);
            prop_assert!(check_relative_error(&cert).unwrap());
        }
    }

    #[test]
    fn a_k_solves_its_quadratic(lambda in 1e-3f64..1e3, n in 1usize..60) {
        let mut acc = 0.0;
        for _ in 0..n {
            let a1 = acc_ppa_next(acc, lambda, 0.0);
            let a = a1 - acc;
            prop_assert!((lambda * (a + acc) - a * a).abs() <= 1e-10 * (1.0 + a * a));
            prop_assert!(a > 0.0);
            acc = a1;
        }
    }

    #[test]
    fn optimal_center_forces_optimal_step(seed in 0u64..10_000, d in 1usize..6, lambda in 0.01f64..10.0, delta in 0.0f64..=1.0) {
        let f = random_quadratic(d, 0.05, 1.0, seed).unwrap();
        let xs = f.optimum().unwrap().x;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let x = &xs + accel::linalg::gaussian_vector(d, &mut rng) * 1e-3;
            let cert = InexactProxCertificate::new(x.clone(), xs.clone(), lambda, f.gradient(&x), delta);
            prop_assert!(!check_relative_error(&cert).unwrap());
        }
        let cert = InexactProxCertificate::new(xs.clone(), xs.clone(), lambda, f.gradient(&xs), delta);
        prop_assert!(check_relative_error(&cert).unwrap());
        let step = GdSubproblemSolver { max_iters: 10 }.solve(&f, &xs, lambda, delta).unwrap();
        prop_assert_eq!(step.x_next, xs);
    }

    #[test]
    fn catalyst_counters_add_up(seed in 0u64..10_000, d in 2usize..10, budget in 20u64..200, kind_i in 0usize..3, lam_scale in 0.2f64..5.0, strong in any::<bool>()) {
        let f = random_quadratic(d, 0.01, 1.0, seed).unwrap();
        let kind = [InnerKind::Gd, InnerKind::GdLineSearch, InnerKind::ConstMomentum][kind_i];
        let mode = if strong { CatalystMode::StronglyConvex } else { CatalystMode::Convex };
        let lambda = lam_scale / f.params().l;
        let x0 = start(d, seed);
        let run = catalyst(&f, kind, lambda, budget, mode, &x0).unwrap();
        let c = &run.counters;
        let cap = c.burden.ceil() as u64;
        prop_assert_eq!(c.n_total, c.n_useless + c.n_inner.iter().sum::<u64>());
        prop_assert!(c.n_useless < cap.max(1));
        prop_assert!((c.n_total as f64) < (c.n_outer as f64 + 1.0) * c.burden);
        prop_assert!(c.n_inner.iter().all(|&n| n <= cap), "{:?} vs {}", c.n_inner, c.burden);
        prop_assert_eq!(run.trace.inner_runs.len(), c.n_outer);
        prop_assert_eq!(run.trace.meta["n_total"], c.n_total as f64);
        if c.n_outer > 0 {
            let g = run.trace.records[c.n_outer].f_gap.unwrap();
            prop_assert!(g <= catalyst_bound(r0_sq(&f, &x0), lambda, c.n_outer) * (1.0 + 1e-9) + 1e-14);
        }
    }
}
