#![allow(dead_code)]

use std::sync::Arc;

use accel::composite::{fista, prox_agm};
use accel::momentum::{bregman_agm, constant_momentum, fgm, item, monotone_wrap, ogm, tmm};
use accel::oracles::{make_huber, random_quadratic, CompositeProblem, Objective, Vector};
use accel::poly_methods::gradient_descent;
use accel::prox_outer::{accel_inexact_ppa, catalyst, ppa, CatalystMode, ExactProxSolver, Steps};
use accel::trace::{BacktrackMode, Dgf, Form, InnerKind, Method, Trace};

pub fn quad(seed: u64) -> Arc<dyn Objective> {
    Arc::new(random_quadratic(10, 0.01, 1.0, seed).unwrap())
}

pub fn huber() -> Arc<dyn Objective> {
    Arc::new(make_huber(0.1, 1.0, 10).unwrap())
}

pub fn start(d: usize, seed: u64) -> Vector {
    Vector::from_fn(d, |i, _| ((i as u64 * 7 + seed * 13) % 11) as f64 / 5.0 - 1.0)
}

/// Every smooth method with a potential certificate, run on `f` for `n` steps.
pub fn certified_smooth_runs(f: &Arc<dyn Objective>, x0: &Vector, n: usize) -> Vec<Trace> {
    let p = f.params();
    let cp = CompositeProblem::smooth(f.clone());
    let mut out = vec![
        gradient_descent(f.as_ref(), 1.0 / p.l, x0, n).unwrap(),
        ogm(f.as_ref(), x0, n, Form::I).unwrap(),
        ogm(f.as_ref(), x0, n, Form::II).unwrap(),
        item(f.as_ref(), x0, n).unwrap(),
        bregman_agm(&cp, Dgf::Euclidean, x0, n).unwrap(),
        ppa(f.as_ref(), &Steps::Constant(2.0 / p.l), x0, n).unwrap(),
        accel_inexact_ppa(f.as_ref(), &mut ExactProxSolver, &Steps::Constant(2.0 / p.l), 0.0, x0, n, 0.0).unwrap(),
        catalyst(f.as_ref(), InnerKind::Gd, 1.0 / p.l, 20 * n as u64, CatalystMode::Convex, x0).unwrap().trace,
    ];
    for form in [Form::I, Form::II, Form::III] {
        out.push(fgm(f.as_ref(), x0, n, form, 0.0).unwrap());
        out.push(fgm(f.as_ref(), x0, n, form, p.mu).unwrap());
    }
    for mode in [BacktrackMode::Monotone, BacktrackMode::Reset, BacktrackMode::Decrease(0.9)] {
        out.push(fista(&cp, p.mu, (0.1 * p.l).max(2.0 * p.mu), 2.0, n, mode, x0).unwrap());
        out.push(prox_agm(&cp, 0.0, (0.1 * p.l).max(2.0 * p.mu), 2.0, n, mode, x0).unwrap());
    }
    out.push(monotone_wrap(&Method::Fgm { form: Form::I, mu: 0.0, l: p.l }, &cp, x0, n).unwrap());
    if p.mu > 0.0 {
        out.push(gradient_descent(f.as_ref(), 1.0 / p.l, x0, n).unwrap());
        out.push(tmm(f.as_ref(), x0, n).unwrap());
        for form in [Form::I, Form::II] {
            out.push(constant_momentum(f.as_ref(), x0, n, form).unwrap());
        }
        out.push(ppa(f.as_ref(), &Steps::Geometric { lambda0: 1.0, ratio: 1.5 }, x0, n.min(30)).unwrap());
        out.push(
            accel_inexact_ppa(f.as_ref(), &mut ExactProxSolver, &Steps::Constant(1.0 / p.l), 0.0, x0, n, p.mu).unwrap(),
        );
        out.push(catalyst(f.as_ref(), InnerKind::Gd, 1.0 / p.l, 20 * n as u64, CatalystMode::StronglyConvex, x0).unwrap().trace);
    }
    out
}
