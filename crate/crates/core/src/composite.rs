//! Accelerated proximal gradient methods with backtracking on `L`: FISTA
//! (prox on the gradient step) and the proximal AGM (prox on `z`, iterates
//! stay in `dom h`).
//!
//! Monotone backtracking uses the `A_k` parameterization; the reset and
//! decrease strategies use the rescaled accumulator `B_k`, whose potential
//! `B_k (F(x_k) - F*) + (1 + μ B_k)/2 ‖z_k - x*‖²` tolerates decreasing
//! estimates.

use crate::driver::{run, Recorder, Stepper};
use crate::error::{invalid, Error};
use crate::momentum::{fgm_coefficients, next_acc, Regime};
use std::sync::Arc;

use crate::oracles::{random_quadratic, CompositeProblem, Objective, Optimum, Simplex, Vector, L1};
use crate::tol::Tolerance;
use crate::trace::{BacktrackMode, Method, StepState, Trace};

/// Maximum number of consecutive increases of the estimate within one
/// iteration.
pub const MAX_INCREASES: usize = 200;

pub(crate) struct CompositeStepper {
    mode: BacktrackMode,
    mu: f64,
    l0: f64,
    alpha: f64,
    prox_on_z: bool,
    x: Vector,
    y: Vector,
    z: Vector,
    /// A_k in monotone mode, B_k otherwise
    acc: f64,
    l_k: f64,
    tol: Tolerance,
}

pub(crate) fn stepper(
    x0: &Vector,
    mode: BacktrackMode,
    mu: f64,
    l0: f64,
    alpha: f64,
    prox_on_z: bool,
) -> Result<CompositeStepper, Error> {
    if !(mu >= 0.0 && l0 > mu && l0.is_finite()) {
        return Err(invalid(format!("need 0 <= mu < L0, got mu={mu}, L0={l0}")));
    }
    if !(alpha > 1.0) {
        return Err(invalid("backtracking factor alpha must exceed 1"));
    }
    if let BacktrackMode::Decrease(beta) = mode {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(invalid("decrease factor beta must lie in (0, 1]"));
        }
    }
    Ok(CompositeStepper {
        mode,
        mu,
        l0,
        alpha,
        prox_on_z,
        x: x0.clone(),
        y: x0.clone(),
        z: x0.clone(),
        acc: 0.0,
        l_k: l0,
        tol: Tolerance::default(),
    })
}

impl CompositeStepper {
    fn first_trial(&self) -> f64 {
        match self.mode {
            BacktrackMode::Monotone => self.l_k,
            BacktrackMode::Reset => self.l0,
            BacktrackMode::Decrease(beta) => (beta * self.l_k).max(self.l0),
        }
    }

    /// `(acc_{k+1}, tau, delta)` for a trial estimate `l`, where `delta` is
    /// expressed so that `z` updates read the same in both parameterizations.
    fn coefficients(&self, l: f64) -> (f64, f64, f64) {
        let mu = self.mu;
        let b = self.acc;
        match self.mode {
            BacktrackMode::Monotone => {
                let q = mu / l;
                let a1 = next_acc(Regime::StronglyConvex(q), b);
                let (tau, delta) = fgm_coefficients(b, a1, q);
                (a1, tau, delta)
            }
            _ => {
                let b1 = (2.0 * l * b + 1.0 + (4.0 * l * b + 4.0 * mu * l * b * b + 1.0).sqrt()) / (2.0 * (l - mu));
                let tau = (b1 - b) * (1.0 + mu * b) / (b1 + 2.0 * mu * b * b1 - mu * b * b);
                let delta = l * (b1 - b) / (1.0 + mu * b1);
                (b1, tau, delta)
            }
        }
    }
}

impl Stepper for CompositeStepper {
    fn x(&self) -> &Vector {
        &self.x
    }
    fn set_x(&mut self, x: Vector) {
        self.x = x;
    }
    fn step(&mut self, rec: &mut Recorder) -> Result<(), Error> {
        let mut l = self.first_trial();
        for attempt in 0..=MAX_INCREASES {
            let q = self.mu / l;
            let (a1, tau, delta) = self.coefficients(l);
            let y = &self.x + (&self.z - &self.x) * tau;
            let g = rec.grad(&y);
            let (x1, z1) = if self.prox_on_z {
                let w = &self.z * (1.0 - q * delta) + &y * (q * delta) - &g * (delta / l);
                let z1 = rec.prox_h(&w, delta / l);
                let r = self.acc / a1;
                (&self.x * r + &z1 * (1.0 - r), z1)
            } else {
                let x1 = rec.prox_h(&(&y - &g / l), 1.0 / l);
                let z1 = &self.z * (1.0 - q * delta) + &y * (q * delta) + (&x1 - &y) * delta;
                (x1, z1)
            };
            let fy = rec.fval(&y);
            let d = &x1 - &y;
            let upper = fy + g.dot(&d) + 0.5 * l * d.norm_squared();
            let fx1 = rec.fval(&x1);
            if !fx1.is_finite() || !upper.is_finite() {
                return Err(rec.diverged(rec.trace.records.len()));
            }
            // relative allowance only: an absolute one would be amplified by A_k
            let mag = fy.abs() + g.dot(&d).abs() + 0.5 * l * d.norm_squared() + fx1.abs();
            if upper - fx1 >= -self.tol.rtol * mag {
                self.x = x1;
                self.y = y;
                self.z = z1;
                self.acc = a1;
                self.l_k = l;
                return Ok(());
            }
            if attempt == MAX_INCREASES {
                break;
            }
            rec.wasted += 1;
            l *= self.alpha;
        }
        Err(Error::RunawayL(MAX_INCREASES))
    }
    fn state(&self) -> StepState {
        let mut st = StepState {
            l_est: Some(self.l_k),
            x: Some(self.x.clone()),
            y: Some(self.y.clone()),
            z: Some(self.z.clone()),
            ..Default::default()
        };
        if self.mode == BacktrackMode::Monotone {
            st.acc = Some(self.acc);
        } else {
            st.bacc = Some(self.acc);
        }
        st
    }
}

fn check_problem(problem: &CompositeProblem, x0: &Vector) -> Result<(), Error> {
    if x0.len() != problem.dim() {
        return Err(invalid(format!("x0 has dimension {}, problem has {}", x0.len(), problem.dim())));
    }
    Ok(())
}

/// Strongly convex FISTA with backtracking. `f` must be smooth on all of
/// `R^d` since gradients are taken at `y_k`, which may leave `dom h`.
pub fn fista(
    problem: &CompositeProblem,
    mu: f64,
    l0: f64,
    alpha: f64,
    n: usize,
    mode: BacktrackMode,
    x0: &Vector,
) -> Result<Trace, Error> {
    check_problem(problem, x0)?;
    if !problem.f.full_domain() {
        return Err(Error::Unsupported("FISTA evaluates gradients outside dom h; f needs full domain".into()));
    }
    let s = stepper(x0, mode, mu, l0, alpha, false)?;
    run(s, Recorder::composite(problem, Method::Fista { mode, mu, l0, alpha }), n)
}

/// Proximal accelerated gradient method: the prox acts on `z_k`, and `x_k`,
/// `y_k` are convex combinations of feasible points.
pub fn prox_agm(
    problem: &CompositeProblem,
    mu: f64,
    l0: f64,
    alpha: f64,
    n: usize,
    mode: BacktrackMode,
    x0: &Vector,
) -> Result<Trace, Error> {
    check_problem(problem, x0)?;
    let s = stepper(x0, mode, mu, l0, alpha, true)?;
    run(s, Recorder::composite(problem, Method::ProxAgm { mode, mu, l0, alpha }), n)
}

/// `ℓ = max{α L, L0}`
pub fn ell(alpha: f64, l: f64, l0: f64) -> f64 {
    (alpha * l).max(l0)
}

/// `min{2/N², (1 - √(μ/ℓ))^N} ℓ ‖x0 - x*‖²`
pub fn fista_bound(mu: f64, ell: f64, r0_sq: f64, n: usize) -> f64 {
    crate::momentum::fgm_bound(ell, mu, r0_sq, n)
}

/// `⌈log_α(L/L0)⌉`, zero when `L0 >= L`.
pub fn max_wasted_steps(alpha: f64, l: f64, l0: f64) -> usize {
    if l0 >= l {
        0
    } else {
        ((l / l0).ln() / alpha.ln() - 1e-12).ceil() as usize
    }
}

/// Proximal gradient iterations with step `1/L`, used to obtain a reference
/// optimum for composite test problems without a closed form.
pub fn reference_optimum(problem: &CompositeProblem, x0: &Vector, iters: usize) -> Optimum {
    let l = problem.f.params().l;
    let mut x = problem.h.prox(x0, 1.0 / l);
    for _ in 0..iters {
        let g = problem.f.gradient(&x);
        x = problem.h.prox(&(&x - g / l), 1.0 / l);
    }
    let f = problem.value(&x);
    Optimum { x, f }
}

/// `½ (x−c)ᵀH(x−c) + weight ‖x‖₁` with `H` a random quadratic of spectrum in
/// `[mu, L]`. The optimum comes from proximal gradient, which converges
/// linearly here.
pub fn lasso_problem(d: usize, mu: f64, l: f64, weight: f64, seed: u64) -> Result<CompositeProblem, Error> {
    if !(weight >= 0.0) {
        return Err(invalid("l1 weight must be nonnegative"));
    }
    let f: Arc<dyn Objective> = Arc::new(random_quadratic(d, mu, l, seed)?);
    let mut p = CompositeProblem::new(f, Arc::new(L1 { weight }), None);
    p.optimum = Some(reference_optimum(&p, &Vector::zeros(d), reference_iters(mu, l)));
    Ok(p)
}

/// Random quadratic restricted to the probability simplex.
pub fn simplex_problem(d: usize, mu: f64, l: f64, seed: u64) -> Result<CompositeProblem, Error> {
    let f: Arc<dyn Objective> = Arc::new(random_quadratic(d, mu, l, seed)?);
    let mut p = CompositeProblem::new(f, Arc::new(Simplex), None);
    let x0 = Vector::from_element(d, 1.0 / d as f64);
    p.optimum = Some(reference_optimum(&p, &x0, reference_iters(mu, l)));
    Ok(p)
}

fn reference_iters(mu: f64, l: f64) -> usize {
    // (1 − μ/L)^k below 1e-20
    ((20.0 * 10f64.ln()) / (mu / l)).ceil() as usize + 100
}
