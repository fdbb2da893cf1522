use accel::momentum::{fgm, item, ogm, ogm_bound};
use accel::oracles::{make_huber, make_quadratic, random_quadratic, ClassParams, Objective, Vector};
use accel::poly_methods::*;
use accel::trace::Form;
use accel::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

fn dist(t: &accel::Trace, k: usize) -> f64 {
    t.records[k].dist_opt.unwrap()
}

#[test]
fn gd_step_contracts_by_the_extreme_eigen_factor() {
    let f = make_quadratic(&[1.0, 10.0], Vector::zeros(2)).unwrap();
    let t = gradient_descent(&f, 2.0 / 11.0, &v(&[1.0, 1.0]), 30).unwrap();
    assert!((&t.records[1].point - v(&[9.0 / 11.0, -9.0 / 11.0])).norm() < 1e-15);
    for k in 0..30 {
        assert!((dist(&t, k + 1) / dist(&t, k) - 9.0 / 11.0).abs() < 1e-12);
    }
}

#[test]
fn gd_from_the_optimum_stays_put() {
    let f = random_quadratic(5, 0.1, 1.0, 2).unwrap();
    let xs = f.optimum().unwrap().x;
    let t = gradient_descent(&f, 1.0, &xs, 10).unwrap();
    assert!(t.records.iter().all(|r| r.point == xs));
    assert_eq!(t.records.len(), 11);
}

#[test]
fn gd_meets_the_sublinear_worst_case_on_huber() {
    for n in [5usize, 20] {
        let (l, x0) = (1.0, 1.0);
        let tau = x0 / (2.0 * n as f64 + 1.0);
        let f = make_huber(tau, l, 1).unwrap();
        let t = gradient_descent(&f, 1.0 / l, &v(&[x0]), n).unwrap();
        let want = l * x0 * x0 / (2.0 * (2.0 * n as f64 + 1.0));
        assert!((t.final_gap().unwrap() - want).abs() <= 1e-9 * want);
    }
}

#[test]
fn gd_divergence_is_typed() {
    let f = make_quadratic(&[1.0, 10.0], Vector::zeros(2)).unwrap();
    match gradient_descent(&f, 1.0, &v(&[1.0, 1.0]), 2000) {
        Err(Error::Diverged { k, partial }) => {
            assert!(k > 0);
            assert!(partial.records.iter().all(|r| r.point.iter().all(|x| x.is_finite())));
        }
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn chebyshev_coefficients_and_bound() {
    let p = ClassParams::new(1.0, 10.0).unwrap();
    let d = chebyshev_deltas(&p, 2);
    assert!((d[0] - 9.0 / 11.0).abs() < 1e-15);
    assert!((d[1] - 99.0 / 161.0).abs() < 1e-15);
    let xi: f64 = (10f64.sqrt() + 1.0) / (10f64.sqrt() - 1.0);
    assert!((xi - 1.924951).abs() < 1e-6);
    let b = chebyshev_bound(&p, 5);
    assert!((b - 2.0 / (xi.powi(5) + xi.powi(-5))).abs() < 1e-15);
    assert!((b - 0.0756).abs() < 5e-5);
    let f = make_quadratic(&[1.0, 10.0], v(&[0.3, -0.2])).unwrap();
    let xs = f.optimum().unwrap().x;
    assert!(chebyshev(&p, &f, &xs, 5).unwrap().records.iter().all(|r| r.point == xs));
    assert!(matches!(chebyshev(&ClassParams::new(0.0, 1.0).unwrap(), &f, &xs, 5), Err(Error::InvalidArgument(_))));
}

#[test]
fn heavy_ball_limit_and_asymptotic_rate() {
    let p = ClassParams::new(1.0, 10.0).unwrap();
    let d = delta_infinity(&p);
    // independently: (√10 − 1)/(√10 + 1)
    assert!((d - 0.519494).abs() < 1e-6);
    assert!((d * d - 0.269874).abs() < 1e-6);
    let eigs: Vec<f64> = (0..8).map(|i| 1.0 + 9.0 * i as f64 / 7.0).collect();
    let f = make_quadratic(&eigs, Vector::zeros(8)).unwrap();
    let t = heavy_ball(&p, &f, &Vector::from_element(8, 1.0), 200).unwrap();
    let rate = (dist(&t, 200) / dist(&t, 180)).powf(1.0 / 20.0);
    assert!(rate <= d + 0.01, "{rate} vs {d}");
    assert!(matches!(heavy_ball(&ClassParams::new(0.0, 1.0).unwrap(), &f, &Vector::zeros(8), 3), Err(Error::InvalidArgument(_))));
    let z = Vector::zeros(8);
    assert!(heavy_ball(&p, &f, &z, 10).unwrap().records.iter().all(|r| r.point == z));
}

#[test]
fn cg_terminates_finitely() {
    let f = random_quadratic(3, 0.1, 1.0, 5).unwrap();
    let x0 = v(&[1.0, -2.0, 0.5]);
    let t = conjugate_gradient_quadratic(&f, &x0, 3).unwrap();
    let r0 = (&x0 - f.optimum().unwrap().x).norm();
    assert!(t.last().grad_norm <= 1e-8 * f.params().l * r0);
    let xs = f.optimum().unwrap().x;
    let t = conjugate_gradient_quadratic(&f, &xs, 5).unwrap();
    assert!(t.records.iter().all(|r| r.point == xs));
    let h = make_huber(0.1, 1.0, 3).unwrap();
    assert!(matches!(conjugate_gradient_quadratic(&h, &x0, 3), Err(Error::Unsupported(_))));
}

#[test]
fn cg_beats_the_ogm_bound() {
    let f = random_quadratic(20, 0.001, 1.0, 9).unwrap();
    let x0 = Vector::from_element(20, 1.0);
    let r0_sq = (&x0 - f.optimum().unwrap().x).norm_squared();
    let t = conjugate_gradient_quadratic(&f, &x0, 5).unwrap();
    assert!(t.final_gap().unwrap() <= ogm_bound(1.0, r0_sq, 5).unwrap());
}

/// `min_P ‖P(H) e0‖` over degree-`n` polynomials with `P(0) = 1`.
fn best_polynomial_error(h: &DMatrix<f64>, e0: &Vector, n: usize) -> f64 {
    if n == 0 {
        return e0.norm();
    }
    let d = e0.len();
    let mut k = DMatrix::zeros(d, n);
    let mut col = e0.clone();
    for j in 0..n {
        col = h * col;
        k.set_column(j, &col);
    }
    let c = k.clone().svd(true, true).solve(&(-e0), 1e-14).unwrap();
    (e0 + k * c).norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn deltas_decrease_to_the_limit(mu in 0.001f64..0.9, l in 1.0f64..100.0) {
        let p = ClassParams::new(mu, l).unwrap();
        // the gap to the limit shrinks like ((1-√q)/(1+√q))^{2k}
        let n = 200 + (10.0 * (l / mu).sqrt()) as usize;
        let d = chebyshev_deltas(&p, n);
        let lim = delta_infinity(&p);
        prop_assert!(d.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(d.iter().all(|&x| x > 0.0 && x < 1.0 && x >= lim * (1.0 - 1e-13)));
        prop_assert!((d[n - 1] - lim).abs() < 1e-6);
    }

    #[test]
    fn chebyshev_bound_holds(seed in 0u64..10_000, d in 2usize..12, kappa in 2.0f64..200.0, n in 0usize..=50) {
        let f = random_quadratic(d, 1.0 / kappa, 1.0, seed).unwrap();
        let p = f.params();
        let x0 = Vector::from_fn(d, |i, _| ((i + 1) as f64).sin());
        let t = chebyshev(&p, &f, &x0, n).unwrap();
        let r0 = dist(&t, 0);
        prop_assert!(chebyshev_bound(&p, n) * r0 - dist(&t, n) >= -1e-8 * r0);
    }

    #[test]
    fn chebyshev_is_not_instance_optimal(seed in 0u64..10_000, n in 1usize..6) {
        let f = random_quadratic(6, 0.05, 1.0, seed).unwrap();
        let p = f.params();
        let x0 = Vector::from_fn(6, |i, _| 1.0 + i as f64);
        let e0 = &x0 - f.optimum().unwrap().x;
        let t = chebyshev(&p, &f, &x0, n).unwrap();
        let best = best_polynomial_error(&f.hessian(), &e0, n);
        prop_assert!(dist(&t, n) >= best * (1.0 - 1e-8));
    }

    #[test]
    fn cg_gap_is_smallest(seed in 0u64..10_000, d in 2usize..15) {
        let f = random_quadratic(d, 0.01, 1.0, seed).unwrap();
        let p = f.params();
        let x0 = Vector::from_fn(d, |i, _| (i as f64 * 0.7).cos());
        let n = 2 * d;
        let cg = conjugate_gradient_quadratic(&f, &x0, n).unwrap();
        let f0 = cg.records[0].f_gap.unwrap();
        let others = [
            gradient_descent(&f, 1.0 / p.l, &x0, n).unwrap(),
            chebyshev(&p, &f, &x0, n).unwrap(),
            heavy_ball(&p, &f, &x0, n).unwrap(),
            fgm(&f, &x0, n, Form::I, 0.0).unwrap(),
            fgm(&f, &x0, n, Form::I, p.mu).unwrap(),
            ogm(&f, &x0, n, Form::I).unwrap(),
            item(&f, &x0, n).unwrap(),
        ];
        for t in &others {
            for k in 0..=n {
                let (a, b) = (cg.records[k].f_gap.unwrap(), t.records[k].f_gap.unwrap());
                prop_assert!(a <= b + 1e-9 * f0 + 1e-14, "{} k={k}: cg {a} vs {b}", t.method.name());
            }
        }
    }
}
