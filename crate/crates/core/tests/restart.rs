use accel::momentum::fgm;
use accel::oracles::*;
use accel::poly_methods::gradient_descent;
use accel::restart::*;
use accel::trace::{Form, Trace};
use accel::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn final_gap(t: &Trace) -> f64 {
    t.last().f_gap.unwrap()
}

fn heb_setup(r: f64) -> (HebPower, HebParams, Vector, f64) {
    let f = make_heb_power(r, 3, 2.0).unwrap();
    let h = f.heb().unwrap();
    let heb = HebParams::new(h.r, h.mu, f.params().l).unwrap();
    let x0 = Vector::from_column_slice(&[0.6, -0.5, 0.3]);
    let f0 = f.value(&x0) - f.optimum().unwrap().f;
    (f, heb, x0, f0)
}

#[test]
fn fixed_restart_halves_gd_each_epoch() {
    let f = make_quadratic(&[1.0, 10.0], Vector::zeros(2)).unwrap();
    let k = halving_epoch(1.0, 10.0).unwrap();
    assert_eq!(k, 80);
    let x0 = Vector::from_column_slice(&[1.0, 1.0]);
    let t = fixed_restart(&f, RestartInner::Gd, k, &x0, 6).unwrap();
    let f0 = t.records[0].f_gap.unwrap();
    let mut prev = f0;
    for e in 1..=6 {
        let g = t.records[e * k].f_gap.unwrap();
        // gd alone reaches machine zero here; only the ratio is meaningful above it
        if prev > 1e-250 {
            assert!(g <= 0.5 * prev);
        }
        prev = g;
    }
    for total in 0..=6 * k {
        assert!(t.records[total].f_gap.unwrap() <= fixed_restart_bound(1.0, 10.0, total, f0) * (1.0 + 1e-12));
    }
}

#[test]
fn restarting_gd_changes_nothing() {
    let f = random_quadratic(5, 0.05, 1.0, 3).unwrap();
    let x0 = Vector::from_element(5, 1.0);
    let a = fixed_restart(&f, RestartInner::Gd, 7, &x0, 5).unwrap();
    let b = gradient_descent(&f, 1.0, &x0, 35).unwrap();
    assert_eq!(a.records.len(), b.records.len());
    for (p, q) in a.records.iter().zip(&b.records) {
        assert_eq!(p.point, q.point);
        assert_eq!(p.k, q.k);
    }
}

#[test]
fn zero_epochs_return_the_start() {
    let f = random_quadratic(3, 0.05, 1.0, 0).unwrap();
    let x0 = Vector::from_element(3, 0.5);
    let t = fixed_restart(&f, RestartInner::Fgm, 10, &x0, 0).unwrap();
    assert_eq!(t.records.len(), 1);
    assert_eq!(t.last().point, x0);
    assert!(matches!(fixed_restart(&f, RestartInner::Fgm, 0, &x0, 3), Err(Error::InvalidArgument(_))));
}

#[test]
fn scheduled_restart_meets_its_bound() {
    let c = 4.0 * (2.0 / std::f64::consts::E).exp();
    assert!((restart_constant() - c).abs() < 1e-15);
    // 4·e^{0.7357589} recomputed independently
    assert!((c - 8.348261).abs() < 1e-6);
    let (f, heb, x0, f0) = heb_setup(4.0);
    assert_eq!(heb.tau, 0.5);
    let t = scheduled_restart(&heb, &f, &x0, f0, 2000).unwrap();
    let n = t.meta["inner_iters"];
    assert!(n >= 2000.0 && n >= 2.0 * heb.c_star(f0));
    assert!(final_gap(&t) <= scheduled_bound(&heb, f0, n));
    assert!(matches!(scheduled_restart(&heb, &f, &x0, 0.0, 100), Err(Error::InvalidArgument(_))));
}

#[test]
fn strongly_convex_schedule_is_linear() {
    let f = make_quadratic(&[0.05, 1.0], Vector::zeros(2)).unwrap();
    let heb = HebParams::new(2.0, 0.05, 1.0).unwrap();
    assert_eq!(heb.tau, 0.0);
    assert!((heb.kappa - 20.0).abs() < 1e-12);
    let x0 = Vector::from_column_slice(&[1.0, 1.0]);
    let f0 = f.value(&x0);
    let t = scheduled_restart(&heb, &f, &x0, f0, 600).unwrap();
    let k0 = (std::f64::consts::E * (restart_constant() * 20.0).sqrt()).ceil() as u64;
    assert!(t.inner_runs.iter().all(|&k| k == k0));
    assert!(final_gap(&t) <= scheduled_bound(&heb, f0, t.meta["inner_iters"]));
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let m = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / m, pts.iter().map(|p| p.1).sum::<f64>() / m);
    pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>()
}

/// `(ln N, ln gap, ln bound)` of scheduled restart on `‖x‖^r/r` with `N = 2^lo..2^hi`.
fn rate_points(r: f64, lo: u32, hi: u32) -> Vec<(f64, f64, f64)> {
    let f = make_heb_power(r, 3, 1.0).unwrap();
    let h = f.heb().unwrap();
    let heb = HebParams::new(h.r, h.mu, f.params().l).unwrap();
    let x0 = Vector::from_column_slice(&[0.0, 1.0, 0.0]);
    let f0 = f.value(&x0);
    (lo..=hi)
        .map(|e| {
            let t = scheduled_restart(&heb, &f, &x0, f0, 1 << e).unwrap();
            let n = t.meta["inner_iters"];
            (n.ln(), final_gap(&t).ln(), scheduled_bound(&heb, f0, n).ln())
        })
        .collect()
}

#[test]
fn scheduled_bound_holds_across_budgets() {
    for r in [3.0, 4.0] {
        assert!(rate_points(r, 7, 11).iter().all(|p| p.1 <= p.2), "r={r}");
    }
}

#[test]
fn scheduled_rate_reaches_the_exponent() {
    for r in [3.0, 4.0] {
        let tau = 1.0 - 2.0 / r;
        let pts: Vec<(f64, f64)> = rate_points(r, 11, 15).iter().map(|p| (p.0, p.1)).collect();
        let m = slope(&pts);
        assert!(m <= -2.0 / tau + 0.3, "r={r}: slope {m}");
    }
}

#[test]
fn grid_beats_plain_fgm_and_accounts_iterations() {
    let f = random_quadratic(10, 0.001, 1.0, 6).unwrap();
    let x0 = Vector::from_element(10, 1.0);
    let n = 256;
    let g = grid_restart(&f, &x0, n).unwrap();
    assert_eq!(g.table.len(), 72);
    assert_eq!(grid_size(n), 72);
    let total: usize = g.table.iter().map(|c| c.iters).sum();
    assert_eq!(total, g.table.len() * n);
    assert!(g.table.iter().all(|c| c.final_value >= g.best.last().value));
    let plain = fgm(&f, &x0, n, Form::I, 0.0).unwrap();
    assert!(final_gap(&g.best) < final_gap(&plain));
    assert!(matches!(grid_restart(&f, &x0, 3), Err(Error::InvalidArgument(_))));
}

#[test]
fn grid_guarantee_on_heb() {
    let (f, heb, x0, f0) = heb_setup(4.0);
    let g = grid_restart(&f, &x0, 1024).unwrap();
    assert!(final_gap(&g.best) <= adaptive_bound(&heb, f0, 1024.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn heb_power_lower_bound_is_tight(r in 2.0f64..6.0, d in 1usize..6, seed in 0u64..1000) {
        let f = make_heb_power(r, d, 2.0).unwrap();
        let h = f.heb().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let x = accel::linalg::gaussian_vector(d, &mut rng) * rng.random::<f64>();
            let lhs = h.mu / h.r * x.norm().powf(h.r);
            let gap = f.value(&x) - f.optimum().unwrap().f;
            prop_assert!(lhs <= gap * (1.0 + 1e-12) + 1e-300);
            prop_assert!((lhs - gap).abs() <= 1e-12 * gap.max(1e-300));
        }
    }

    #[test]
    fn schedules_grow_as_declared(r in 2.0f64..8.0, mu in 0.1f64..2.0, l in 1.0f64..50.0, f0 in 1e-3f64..1e3, n in 10usize..5000) {
        let heb = HebParams::new(r, mu, l).unwrap();
        let c = heb.c_star(f0);
        let s = RestartSchedule::geometric(c, heb.tau, n, ScheduleOrigin::Scheduled { c, tau: heb.tau });
        prop_assert!(s.total() >= n);
        prop_assert!(s.total() - s.k.last().unwrap() < n);
        if heb.tau > 0.0 {
            prop_assert!(s.k.windows(2).all(|w| w[1] >= w[0]));
        } else {
            prop_assert!(s.k.iter().all(|&k| k == s.k[0]));
        }
        for (i, &k) in s.k.iter().enumerate() {
            prop_assert_eq!(k, ((c * (heb.tau * (i + 1) as f64).exp()).ceil() as usize).max(1));
        }
    }

    #[test]
    fn grid_cells_use_exactly_n(n in 4usize..600, p in 1u32..8, q in 0u32..8) {
        let s = grid_schedule(p, q, n);
        prop_assert_eq!(s.total(), n);
        prop_assert!(s.k.iter().all(|&k| k >= 1));
        let lo = n.ilog2() as usize;
        let hi = if n.is_power_of_two() { lo } else { lo + 1 };
        prop_assert_eq!(grid_size(n), lo * (hi + 1));
    }
}
