use std::sync::Arc;

use accel::certify::check_potential;
use accel::composite::*;
use accel::momentum::fgm;
use accel::oracles::*;
use accel::trace::{BacktrackMode, Form, Trace};
use accel::{Error, Tolerance};
use proptest::prelude::*;

const MODES: [BacktrackMode; 3] = [BacktrackMode::Monotone, BacktrackMode::Reset, BacktrackMode::Decrease(0.5)];

fn start(d: usize, seed: u64) -> Vector {
    Vector::from_fn(d, |i, _| (((i as u64 + 3) * 29 + seed * 11) % 17) as f64 / 5.0 - 1.6)
}

fn same_points(a: &Trace, b: &Trace, tol: f64) -> bool {
    a.records.len() == b.records.len()
        && a.records.iter().zip(&b.records).all(|(p, q)| (&p.point - &q.point).norm() <= tol * (1.0 + p.point.norm()))
}

/// Plain ISTA, written out here so the reference does not share code with the library.
fn ista(p: &CompositeProblem, x0: &Vector, iters: usize) -> (Vector, f64) {
    let l = p.f.params().l;
    let mut x = x0.clone();
    for _ in 0..iters {
        let g = p.f.gradient(&x);
        x = p.h.prox(&(&x - &g / l), 1.0 / l);
    }
    let v = p.value(&x);
    (x, v)
}

#[test]
fn smooth_fista_is_fgm() {
    let f: Arc<dyn Objective> = Arc::new(random_quadratic(8, 0.01, 1.0, 5).unwrap());
    let cp = CompositeProblem::smooth(f.clone());
    let x0 = start(8, 5);
    let a = fista(&cp, 0.0, 1.0, 2.0, 60, BacktrackMode::Monotone, &x0).unwrap();
    assert!(same_points(&a, &fgm(f.as_ref(), &x0, 60, Form::I, 0.0).unwrap(), 1e-9));
    let b = prox_agm(&cp, 0.0, 1.0, 2.0, 60, BacktrackMode::Monotone, &x0).unwrap();
    assert!(same_points(&b, &fgm(f.as_ref(), &x0, 60, Form::III, 0.0).unwrap(), 1e-9));
}

#[test]
fn wasted_steps_are_logarithmic() {
    let f: Arc<dyn Objective> = Arc::new(make_quadratic(&[0.1, 0.5, 1.0], Vector::zeros(3)).unwrap());
    let cp = CompositeProblem::smooth(f);
    assert_eq!(max_wasted_steps(2.0, 1.0, 1.0 / 8.0), 3);
    let t = fista(&cp, 0.0, 1.0 / 8.0, 2.0, 100, BacktrackMode::Monotone, &start(3, 1)).unwrap();
    assert!(t.meta["wasted_steps"] <= 3.0);
    assert_eq!(t.meta["grad_calls"], 100.0 + t.meta["wasted_steps"]);
}

#[test]
fn runaway_estimate_is_reported() {
    let f: Arc<dyn Objective> = Arc::new(make_quadratic(&[1.0, 1000.0], Vector::zeros(2)).unwrap());
    let cp = CompositeProblem::smooth(f);
    let r = fista(&cp, 0.0, 1e-3, 1.0001, 5, BacktrackMode::Monotone, &start(2, 0));
    assert!(matches!(r, Err(Error::RunawayL(_))));
    assert!(matches!(fista(&cp, 0.0, 1.0, 1.0, 5, BacktrackMode::Monotone, &start(2, 0)), Err(Error::InvalidArgument(_))));
    assert!(matches!(fista(&cp, 2.0, 1.0, 2.0, 5, BacktrackMode::Monotone, &start(2, 0)), Err(Error::InvalidArgument(_))));
}

#[test]
fn lasso_bound_at_64() {
    let cp = lasso_problem(10, 0.05, 1.0, 0.1, 3).unwrap();
    let (xs, fs) = ista(&cp, &Vector::zeros(10), 100_000);
    let lib = cp.optimum.clone().unwrap();
    assert!((lib.f - fs).abs() <= 1e-12 * (1.0 + fs.abs()));
    let x0 = start(10, 3);
    let r0_sq = (&x0 - &xs).norm_squared();
    for mode in MODES {
        let t = fista(&cp, 0.05, 0.25, 2.0, 64, mode, &x0).unwrap();
        let gap = cp.value(&t.records[64].point) - fs;
        assert!(gap <= fista_bound(0.05, ell(2.0, 1.0, 0.25), r0_sq, 64) + 1e-12, "{mode:?}");
    }
}

#[test]
fn simplex_iterates_stay_feasible() {
    let d = 12;
    let cp = simplex_problem(d, 0.01, 1.0, 8).unwrap();
    let x0 = Vector::from_element(d, 1.0 / d as f64);
    let (xs, fs) = ista(&cp, &x0, 20_000);
    let r0_sq = (&x0 - &xs).norm_squared();
    let tol = Tolerance::default();
    for mode in MODES {
        let t = prox_agm(&cp, 0.0, 0.1, 2.0, 50, mode, &x0).unwrap();
        for r in &t.records {
            for p in [r.state.x.as_ref(), r.state.y.as_ref(), r.state.z.as_ref(), Some(&r.point)].into_iter().flatten() {
                assert!(Simplex.contains(p, &tol));
            }
        }
        let gap = cp.value(&t.records[50].point) - fs;
        assert!(gap <= fista_bound(0.0, ell(2.0, 1.0, 0.1), r0_sq, 50) + 1e-12, "{mode:?}");
    }
}

#[test]
fn start_at_composite_optimum_is_stationary() {
    let cp = lasso_problem(6, 0.1, 1.0, 0.2, 2).unwrap();
    let xs = cp.optimum.clone().unwrap().x;
    for mode in MODES {
        for t in [
            prox_agm(&cp, 0.1, 1.0, 2.0, 30, mode, &xs).unwrap(),
            fista(&cp, 0.1, 1.0, 2.0, 30, mode, &xs).unwrap(),
        ] {
            assert!(t.records.iter().all(|r| (&r.point - &xs).norm() <= 1e-9));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn backtracking_invariants(seed in 0u64..10_000, d in 2usize..10, l0 in 0.02f64..3.0, mu_frac in 0.0f64..0.9, mode_i in 0usize..3, agm in any::<bool>()) {
        let mu_f = 0.01;
        let cp = lasso_problem(d, mu_f, 1.0, 0.1, seed).unwrap();
        let mu = mu_frac * mu_f;
        let l0 = l0.max(2.0 * mu + 1e-3);
        let x0 = start(d, seed);
        let mode = MODES[mode_i];
        let n = 40;
        let t = if agm { prox_agm(&cp, mu, l0, 2.0, n, mode, &x0) } else { fista(&cp, mu, l0, 2.0, n, mode, &x0) }.unwrap();
        let f = cp.f.as_ref();
        let cap = ell(2.0, 1.0, l0);
        let mut prev_l = l0;
        for k in 1..=n {
            let st = &t.records[k].state;
            let (x1, y, l) = (st.x.as_ref().unwrap(), st.y.as_ref().unwrap(), st.l_est.unwrap());
            prop_assert!(l <= cap * (1.0 + 1e-12));
            if mode == BacktrackMode::Monotone {
                prop_assert!(l >= prev_l);
            }
            prev_l = l;
            let dd = x1 - y;
            let g = f.gradient(y);
            let upper = f.value(y) + g.dot(&dd) + 0.5 * l * dd.norm_squared();
            let mag = f.value(y).abs() + g.dot(&dd).abs() + l * dd.norm_squared() + f.value(x1).abs();
            prop_assert!(upper - f.value(x1) >= -1e-9 * mag);
        }
        let r = check_potential(&t, &cp, Tolerance::default()).unwrap();
        prop_assert!(r.passed(), "{:?}", r.worst());
        if mode == BacktrackMode::Monotone {
            let o = cp.optimum.clone().unwrap();
            let last = &t.records[n];
            let (a_n, l_n) = (last.state.acc.unwrap(), last.state.l_est.unwrap());
            let phi0 = 0.5 * l0 * (&x0 - &o.x).norm_squared();
            let lhs = a_n * (cp.value(&last.point) - o.f);
            prop_assert!(lhs <= (l_n / l0) * phi0 * (1.0 + 1e-9) + 1e-12);
        }
    }
}
