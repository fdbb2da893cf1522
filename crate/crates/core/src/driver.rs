//! Shared iteration plumbing: oracle-call accounting, record emission and the
//! monotone wrapper.

use std::time::Instant;

use crate::error::Error;
use crate::linalg::all_finite;
use crate::oracles::{CompositeProblem, Objective, Optimum, Vector};
use crate::trace::{Method, Record, StepState, Trace};

enum View<'a> {
    Smooth(&'a dyn Objective),
    Composite(&'a CompositeProblem),
}

pub(crate) struct Recorder<'a> {
    view: View<'a>,
    optimum: Option<Optimum>,
    start: Instant,
    pub trace: Trace,
    pub grad_calls: u64,
    pub prox_calls: u64,
    pub inner_iters: u64,
    /// rejected backtracking trials
    pub wasted: u64,
}

impl<'a> Recorder<'a> {
    pub fn smooth(f: &'a dyn Objective, method: Method) -> Self {
        Recorder {
            optimum: f.optimum(),
            view: View::Smooth(f),
            start: Instant::now(),
            trace: Trace::new(method),
            grad_calls: 0,
            prox_calls: 0,
            inner_iters: 0,
            wasted: 0,
        }
    }

    pub fn composite(p: &'a CompositeProblem, method: Method) -> Self {
        Recorder {
            optimum: p.optimum.clone(),
            view: View::Composite(p),
            start: Instant::now(),
            trace: Trace::new(method),
            grad_calls: 0,
            prox_calls: 0,
            inner_iters: 0,
            wasted: 0,
        }
    }

    fn f(&self) -> &'a dyn Objective {
        match self.view {
            View::Smooth(f) => f,
            View::Composite(p) => p.f.as_ref(),
        }
    }

    pub fn grad(&mut self, x: &Vector) -> Vector {
        self.grad_calls += 1;
        self.f().gradient(x)
    }

    /// Value of the smooth part.
    pub fn fval(&self, x: &Vector) -> f64 {
        self.f().value(x)
    }

    pub fn prox_h(&mut self, x: &Vector, step: f64) -> Vector {
        self.prox_calls += 1;
        match self.view {
            View::Smooth(_) => x.clone(),
            View::Composite(p) => p.h.prox(x, step),
        }
    }

    /// Objective `F` of the problem being solved.
    pub fn objective(&self, x: &Vector) -> f64 {
        match self.view {
            View::Smooth(f) => f.value(x),
            View::Composite(p) => p.value(x),
        }
    }

    pub fn diverged(&self, k: usize) -> Error {
        Error::Diverged { k, partial: Box::new(self.trace.clone()) }
    }

    pub fn push(&mut self, k: usize, point: &Vector, state: StepState) -> Result<(), Error> {
        if !all_finite(point) {
            return Err(self.diverged(k));
        }
        let value = self.objective(point);
        let grad_norm = match self.view {
            View::Smooth(f) => f.gradient(point).norm(),
            View::Composite(p) => p.stationarity(point),
        };
        if value.is_nan() || (value.is_infinite() && matches!(self.view, View::Smooth(_))) || !grad_norm.is_finite() {
            return Err(self.diverged(k));
        }
        let (f_gap, dist_opt) = match &self.optimum {
            Some(o) => (Some(value - o.f), Some((point - &o.x).norm())),
            None => (None, None),
        };
        self.trace.records.push(Record {
            k,
            point: point.clone(),
            value,
            grad_norm,
            f_gap,
            dist_opt,
            potential: None,
            grad_calls: self.grad_calls,
            prox_calls: self.prox_calls,
            inner_iters: self.inner_iters,
            wall_ns: self.start.elapsed().as_nanos(),
            state,
        });
        Ok(())
    }

    pub fn finish(self) -> Trace {
        let mut t = self.trace;
        t.meta.insert("grad_calls".into(), self.grad_calls as f64);
        t.meta.insert("prox_calls".into(), self.prox_calls as f64);
        t.meta.insert("inner_iters".into(), self.inner_iters as f64);
        t.meta.insert("wasted_steps".into(), self.wasted as f64);
        t
    }
}

/// One-step-at-a-time view of a method whose output sequence `x_k` can be
/// overwritten between iterations.
pub(crate) trait Stepper {
    fn x(&self) -> &Vector;
    fn set_x(&mut self, x: Vector);
    fn step(&mut self, rec: &mut Recorder) -> Result<(), Error>;
    fn state(&self) -> StepState;
}

pub(crate) fn run(mut s: impl Stepper, mut rec: Recorder, n: usize) -> Result<Trace, Error> {
    rec.push(0, &s.x().clone(), s.state())?;
    for k in 0..n {
        s.step(&mut rec)?;
        rec.push(k + 1, &s.x().clone(), s.state())?;
    }
    Ok(rec.finish())
}

/// Keeps the best point seen so far and feeds it back as `x_k` before each
/// iteration.
pub(crate) fn run_monotone(mut s: impl Stepper, mut rec: Recorder, n: usize) -> Result<Trace, Error> {
    let mut best = s.x().clone();
    let mut best_f = rec.objective(&best);
    rec.push(0, &best, s.state())?;
    for k in 0..n {
        s.set_x(best.clone());
        s.step(&mut rec)?;
        let fx = rec.objective(s.x());
        if fx <= best_f {
            best = s.x().clone();
            best_f = fx;
        }
        rec.push(k + 1, &best, s.state())?;
    }
    Ok(rec.finish())
}
