//! Restart schemes: run an inner method for `k_i` iterations, restart it from
//! its output, repeat. Constant schedules exploit strong convexity; geometric
//! ones exploit a Hölderian error bound `(μ/r) d(x, X⋆)^r ≤ f(x) − f⋆`, and a
//! log-scale grid over schedules removes the need to know `(r, μ)`.

use std::f64::consts::E;

use crate::error::{invalid, Error};
use crate::momentum::fgm;
use crate::oracles::{Objective, Vector};
use crate::poly_methods::gradient_descent;
use crate::trace::{Form, Method, Trace};

/// `c = 4 e^{2/e}`.
pub fn restart_constant() -> f64 {
    4.0 * (2.0 / E).exp()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HebParams {
    pub r: f64,
    pub mu_heb: f64,
    /// `L / μ^{2/r}`
    pub kappa: f64,
    /// `1 − 2/r`
    pub tau: f64,
}

impl HebParams {
    pub fn new(r: f64, mu_heb: f64, l: f64) -> Result<Self, Error> {
        if !(r >= 2.0 && r.is_finite()) {
            return Err(invalid(format!("error-bound exponent r = {r} must be at least 2")));
        }
        if !(mu_heb > 0.0 && l > 0.0) {
            return Err(invalid("mu and L must be positive"));
        }
        Ok(HebParams { r, mu_heb, kappa: l / mu_heb.powf(2.0 / r), tau: 1.0 - 2.0 / r })
    }

    /// `C⋆ = e^{1−τ} (cκ)^{1/2} (f(x0) − f⋆)^{−τ/2}`.
    pub fn c_star(&self, f0_gap: f64) -> f64 {
        E.powf(1.0 - self.tau) * (restart_constant() * self.kappa).sqrt() * f0_gap.powf(-self.tau / 2.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScheduleOrigin {
    Fixed(usize),
    Scheduled { c: f64, tau: f64 },
    Grid { p: u32, q: u32 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RestartSchedule {
    pub k: Vec<usize>,
    pub origin: ScheduleOrigin,
}

impl RestartSchedule {
    /// `k_i = ⌈c e^{τ i}⌉` for `i = 1, …, R` with `R` the first index where
    /// `Σ k_i ≥ n`.
    pub fn geometric(c: f64, tau: f64, n: usize, origin: ScheduleOrigin) -> Self {
        let mut k = Vec::new();
        let mut total = 0;
        let mut i = 1;
        while total < n {
            let ki = ((c * (tau * i as f64).exp()).ceil() as usize).max(1);
            k.push(ki);
            total += ki;
            i += 1;
        }
        RestartSchedule { k, origin }
    }

    pub fn total(&self) -> usize {
        self.k.iter().sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RestartInner {
    /// gradient descent with step `1/L`
    Gd,
    /// the fast gradient method, convex form I
    Fgm,
}

/// Runs `inner` along the epoch lengths, restarting each epoch from the
/// previous output. Records are indexed by cumulative inner iterations; the
/// epoch lengths are stored in `inner_runs`.
pub fn run_schedule(f: &dyn Objective, inner: RestartInner, epochs: &[usize], x0: &Vector) -> Result<Trace, Error> {
    let mut trace = Trace::new(Method::Restart);
    let mut x = x0.clone();
    let (mut k_off, mut g_off, mut t_off) = (0usize, 0u64, 0u128);
    for (i, &k) in epochs.iter().enumerate() {
        let t = match inner {
            RestartInner::Gd => gradient_descent(f, 1.0 / f.params().l, &x, k),
            RestartInner::Fgm => fgm(f, &x, k, Form::I, 0.0),
        }
        .map_err(|e| match e {
            Error::Diverged { k: kd, partial } => {
                let mut p = trace.clone();
                p.records.extend(partial.records.into_iter().skip(1).map(|mut r| {
                    r.k += k_off;
                    r
                }));
                Error::Diverged { k: kd + k_off, partial: Box::new(p) }
            }
            other => other,
        })?;
        let skip = if i == 0 { 0 } else { 1 };
        for mut r in t.records.iter().skip(skip).cloned() {
            r.k += k_off;
            r.grad_calls += g_off;
            r.wall_ns += t_off;
            trace.records.push(r);
        }
        let last = t.last();
        x = last.point.clone();
        k_off += k;
        g_off += last.grad_calls;
        t_off += last.wall_ns;
        trace.inner_runs.push(k as u64);
    }
    if trace.records.is_empty() {
        let t = gradient_descent(f, 1.0 / f.params().l, x0, 0)?;
        trace.records = t.records;
    }
    trace.meta.insert("grad_calls".into(), g_off as f64);
    trace.meta.insert("epochs".into(), epochs.len() as f64);
    trace.meta.insert("inner_iters".into(), k_off as f64);
    Ok(trace)
}

/// `epochs` restarts of `k` inner iterations each.
pub fn fixed_restart(f: &dyn Objective, inner: RestartInner, k: usize, x0: &Vector, epochs: usize) -> Result<Trace, Error> {
    if k == 0 {
        return Err(invalid("epoch length must be at least 1"));
    }
    let mut t = run_schedule(f, inner, &vec![k; epochs], x0)?;
    t.meta.insert("k".into(), k as f64);
    Ok(t)
}

/// `⌈8L/μ⌉`, the epoch length that halves the gap of gradient descent.
pub fn halving_epoch(mu: f64, l: f64) -> Result<usize, Error> {
    if !(mu > 0.0 && l > 0.0) {
        return Err(invalid("need mu > 0"));
    }
    Ok((8.0 * l / mu).ceil() as usize)
}

/// `(2^{−μ/(8L)})^T (f(x0) − f⋆)`.
pub fn fixed_restart_bound(mu: f64, l: f64, total: usize, f0_gap: f64) -> f64 {
    2f64.powf(-mu / (8.0 * l) * total as f64) * f0_gap
}

/// Restarted FGM with `k_i = ⌈C⋆ e^{τ i}⌉`, run until `Σ k_i ≥ n`.
pub fn scheduled_restart(heb: &HebParams, f: &dyn Objective, x0: &Vector, f0_gap: f64, n: usize) -> Result<Trace, Error> {
    if !(heb.tau >= 0.0) {
        return Err(invalid("tau must be nonnegative"));
    }
    if !(f0_gap > 0.0 && f0_gap.is_finite()) {
        return Err(invalid("an upper bound on f(x0) - f* is required"));
    }
    let c = heb.c_star(f0_gap);
    let sched = RestartSchedule::geometric(c, heb.tau, n, ScheduleOrigin::Scheduled { c, tau: heb.tau });
    let mut t = run_schedule(f, RestartInner::Fgm, &sched.k, x0)?;
    t.meta.insert("c_star".into(), c);
    t.meta.insert("tau".into(), heb.tau);
    Ok(t)
}

/// Guarantee of the scheduled scheme after `n` inner iterations.
pub fn scheduled_bound(heb: &HebParams, f0_gap: f64, n: f64) -> f64 {
    let s = (restart_constant() * heb.kappa).powf(-0.5);
    if heb.tau == 0.0 {
        (-2.0 / E * s * n).exp() * f0_gap
    } else {
        f0_gap / (heb.tau / E * f0_gap.powf(heb.tau / 2.0) * s * n + 1.0).powf(2.0 / heb.tau)
    }
}

/// Guarantee of the best grid cell after `n` inner iterations per cell.
pub fn adaptive_bound(heb: &HebParams, f0_gap: f64, n: f64) -> f64 {
    if heb.tau == 0.0 {
        let s = (restart_constant() * heb.kappa).powf(-0.5);
        (-s / E * n).exp() * f0_gap
    } else {
        scheduled_bound(heb, f0_gap, (n - 1.0) / 4.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridCell {
    pub p: u32,
    pub q: u32,
    pub final_value: f64,
    pub final_gap: Option<f64>,
    pub iters: usize,
}

#[derive(Clone, Debug)]
pub struct GridResult {
    pub best: Trace,
    pub p: u32,
    pub q: u32,
    pub table: Vec<GridCell>,
}

/// Number of grid cells `⌊log₂ n⌋ (⌈log₂ n⌉ + 1)`.
pub fn grid_size(n: usize) -> usize {
    let (lo, hi) = log2_floor_ceil(n);
    (lo * (hi + 1)) as usize
}

fn log2_floor_ceil(n: usize) -> (u32, u32) {
    let lo = usize::BITS - 1 - n.leading_zeros();
    let hi = if n.is_power_of_two() { lo } else { lo + 1 };
    (lo, hi)
}

/// Schedule of cell `(p, q)`: `k_i = 2^p` for `q = 0`, `⌈2^p e^{2^{−q} i}⌉`
/// otherwise. The last epoch is cut so that the cell uses exactly `n` inner
/// iterations.
pub fn grid_schedule(p: u32, q: u32, n: usize) -> RestartSchedule {
    let c = 2f64.powi(p as i32);
    let tau = if q == 0 { 0.0 } else { 2f64.powi(-(q as i32)) };
    let mut s = RestartSchedule::geometric(c, tau, n, ScheduleOrigin::Grid { p, q });
    let over = s.total() - n;
    if over > 0 {
        *s.k.last_mut().unwrap() -= over;
    }
    s
}

/// Runs restarted FGM for every grid cell and keeps the one with the smallest
/// final objective value.
pub fn grid_restart(f: &dyn Objective, x0: &Vector, n: usize) -> Result<GridResult, Error> {
    if n < 4 {
        return Err(invalid("grid search needs a budget of at least 4 iterations"));
    }
    let (lo, hi) = log2_floor_ceil(n);
    let mut table = Vec::new();
    let mut best: Option<(f64, Trace, u32, u32)> = None;
    for p in 1..=lo {
        for q in 0..=hi {
            let s = grid_schedule(p, q, n);
            let t = run_schedule(f, RestartInner::Fgm, &s.k, x0)?;
            let last = t.last();
            table.push(GridCell { p, q, final_value: last.value, final_gap: last.f_gap, iters: s.total() });
            if best.as_ref().map_or(true, |b| last.value < b.0) {
                best = Some((last.value, t, p, q));
            }
        }
    }
    let (_, mut trace, p, q) = best.expect("grid is nonempty");
    trace.meta.insert("p".into(), p as f64);
    trace.meta.insert("q".into(), q as f64);
    trace.meta.insert("grid_cells".into(), table.len() as f64);
    Ok(GridResult { best: trace, p, q, table })
}
