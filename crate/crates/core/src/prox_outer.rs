//! Proximal point methods: the exact proximal point algorithm, the inexact
//! accelerated proximal point method under a relative error criterion, and
//! Catalyst, which solves each proximal subproblem with a linearly convergent
//! first-order method.
//!
//! An approximate proximal step `x ≈_δ prox_{λf}(y)` comes with a subgradient
//! `g ∈ ∂f(x)` and the residual `e = x − y + λ g`; it is accepted when
//! `‖e‖ ≤ δ ‖x − y‖`.

use crate::driver::Recorder;
use crate::error::{invalid, Error};
use crate::oracles::{Objective, Vector};
use crate::tol::Tolerance;
use crate::trace::{InnerKind, Method, StepState, Trace};

/// Proximal step sizes `λ_k` of an outer loop.
#[derive(Clone, Debug, PartialEq)]
pub enum Steps {
    Constant(f64),
    /// `λ_k = lambda0 · ratio^k`
    Geometric { lambda0: f64, ratio: f64 },
    /// Explicit list; must be at least as long as the number of iterations.
    List(Vec<f64>),
}

impl Steps {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            Steps::Constant(l) => *l,
            Steps::Geometric { lambda0, ratio } => lambda0 * ratio.powi(k as i32),
            Steps::List(v) => v[k],
        }
    }

    fn validate(&self, n: usize) -> Result<(), Error> {
        if let Steps::List(v) = self {
            if v.len() < n {
                return Err(invalid(format!("{} step sizes given for {n} iterations", v.len())));
            }
        }
        for k in 0..n {
            let l = self.at(k);
            if !(l >= 0.0 && l.is_finite()) {
                return Err(invalid(format!("step size lambda_{k} = {l} must be finite and nonnegative")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InexactProxCertificate {
    pub e: Vector,
    pub x_next: Vector,
    pub y: Vector,
    pub lambda: f64,
    pub g: Vector,
    pub delta: f64,
}

impl InexactProxCertificate {
    /// Builds a certificate, computing the residual from the other fields.
    pub fn new(x_next: Vector, y: Vector, lambda: f64, g: Vector, delta: f64) -> Self {
        let e = &x_next - &y + &g * lambda;
        InexactProxCertificate { e, x_next, y, lambda, g, delta }
    }

    pub fn ratio(&self) -> f64 {
        self.e.norm() / (&self.x_next - &self.y).norm()
    }
}

/// Checks `‖e‖ ≤ δ‖x_next − y‖` under the default tolerance.
pub fn check_relative_error(cert: &InexactProxCertificate) -> Result<bool, Error> {
    check_relative_error_with(cert, &Tolerance::default())
}

pub fn check_relative_error_with(cert: &InexactProxCertificate, tol: &Tolerance) -> Result<bool, Error> {
    let d = cert.x_next.len();
    if cert.y.len() != d || cert.g.len() != d || cert.e.len() != d {
        return Err(invalid("certificate vectors have inconsistent dimensions"));
    }
    let e = &cert.x_next - &cert.y + &cert.g * cert.lambda;
    let scale = 1f64
        .max(cert.x_next.amax())
        .max(cert.y.amax())
        .max(cert.lambda * cert.g.amax());
    let mismatch = (&e - &cert.e).amax();
    if !(mismatch <= 1e-10 * scale) {
        return Err(Error::InconsistentCertificate(mismatch));
    }
    let lhs = e.norm();
    let rhs = cert.delta * (&cert.x_next - &cert.y).norm();
    Ok(tol.holds(rhs - lhs, lhs.max(rhs)))
}

/// Outcome of one approximate proximal step.
#[derive(Clone, Debug)]
pub struct ProxStep {
    pub x_next: Vector,
    /// subgradient of `f` at `x_next`
    pub g: Vector,
    pub inner_iters: u64,
    pub grad_calls: u64,
}

/// Produces `x ≈_δ prox_{λf}(y)`.
pub trait SubproblemSolver {
    fn solve(&mut self, f: &dyn Objective, y: &Vector, lambda: f64, delta: f64) -> Result<ProxStep, String>;
}

/// Closed-form proximal operator of the oracle; `e = 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExactProxSolver;

impl SubproblemSolver for ExactProxSolver {
    fn solve(&mut self, f: &dyn Objective, y: &Vector, lambda: f64, _delta: f64) -> Result<ProxStep, String> {
        if lambda == 0.0 {
            return Ok(ProxStep { x_next: y.clone(), g: f.gradient(y), inner_iters: 0, grad_calls: 1 });
        }
        let x = f.prox(y, lambda).ok_or_else(|| format!("{} has no closed-form prox", f.name()))?;
        let g = (y - &x) / lambda;
        Ok(ProxStep { x_next: x, g, inner_iters: 0, grad_calls: 0 })
    }
}

/// One explicit step `x = y − step_fraction · λ ∇f(y)`, with `g = ∇f(x)`.
/// The relative error grows with `λL`; it is used to exercise the criterion.
#[derive(Clone, Copy, Debug)]
pub struct GradientStepSolver {
    pub step_fraction: f64,
}

impl SubproblemSolver for GradientStepSolver {
    fn solve(&mut self, f: &dyn Objective, y: &Vector, lambda: f64, _delta: f64) -> Result<ProxStep, String> {
        let x = y - f.gradient(y) * (self.step_fraction * lambda);
        let g = f.gradient(&x);
        Ok(ProxStep { x_next: x, g, inner_iters: 1, grad_calls: 2 })
    }
}

/// Gradient descent on `Φ(w) = f(w) + ‖w − y‖²/(2λ)` from `w₀ = y`, stopped
/// at the first iterate meeting the criterion with the requested `δ`.
#[derive(Clone, Copy, Debug)]
pub struct GdSubproblemSolver {
    pub max_iters: usize,
}

impl SubproblemSolver for GdSubproblemSolver {
    fn solve(&mut self, f: &dyn Objective, y: &Vector, lambda: f64, delta: f64) -> Result<ProxStep, String> {
        let step = 1.0 / (f.params().l + 1.0 / lambda);
        let mut w = y.clone();
        let mut calls = 0;
        for i in 0..=self.max_iters {
            let g = f.gradient(&w);
            calls += 1;
            let e = &w - y + &g * lambda;
            if e.norm() <= delta * (&w - y).norm() {
                return Ok(ProxStep { x_next: w, g, inner_iters: i as u64, grad_calls: calls });
            }
            w -= (e / lambda) * step;
        }
        Err(format!("criterion not met within {} iterations", self.max_iters))
    }
}

/// Exact proximal point algorithm. `μ` is read from the oracle.
pub fn ppa(f: &dyn Objective, lambdas: &Steps, x0: &Vector, n: usize) -> Result<Trace, Error> {
    lambdas.validate(n)?;
    if f.prox(x0, 1.0).is_none() {
        return Err(Error::Unsupported(format!("{} has no closed-form prox", f.name())));
    }
    let mu = f.params().mu;
    let mut rec = Recorder::smooth(f, Method::Ppa { mu });
    let mut x = x0.clone();
    let mut acc = 0.0;
    rec.push(0, &x, StepState { acc: Some(acc), ..Default::default() })?;
    for k in 0..n {
        let lambda = lambdas.at(k);
        if lambda > 0.0 {
            x = f.prox(&x, lambda).expect("prox availability checked above");
            rec.prox_calls += 1;
        }
        acc = acc * (1.0 + lambda * mu) + lambda;
        rec.push(k + 1, &x, StepState { acc: Some(acc), lambda: Some(lambda), ..Default::default() })?;
    }
    Ok(rec.finish())
}

/// `A_N` of the proximal point algorithm.
pub fn ppa_acc(lambdas: &Steps, mu: f64, n: usize) -> f64 {
    (0..n).fold(0.0, |a, k| a * (1.0 + lambdas.at(k) * mu) + lambdas.at(k))
}

/// `‖x0 − x⋆‖²/(2 A_N)`; for `μ = 0` this is `‖x0 − x⋆‖²/(2 Σλ_i)`.
pub fn ppa_bound(r0_sq: f64, lambdas: &Steps, mu: f64, n: usize) -> f64 {
    r0_sq / (2.0 * ppa_acc(lambdas, mu, n))
}

/// `A_{k+1}` of the accelerated method; reduces to `A + a` with
/// `a = (λ + √(λ² + 4Aλ))/2` when `μ = 0`.
pub fn acc_ppa_next(a: f64, lambda: f64, mu: f64) -> f64 {
    let lm = lambda * mu;
    let disc = 4.0 * a * a * lm * (lm + 1.0) + 4.0 * a * lambda * (lm + 1.0) + lambda * lambda;
    a + (lambda + 2.0 * a * lm + disc.sqrt()) / 2.0
}

/// `2R²/(Σ√λ_i)²` for `μ = 0`; for `μ > 0` the smaller of that and
/// `Π_{i=1}^{N−1}(1 − √(λ_iμ/(1+λ_iμ))) R²/(2λ₀)`.
pub fn accel_ppa_bound(r0_sq: f64, lambdas: &Steps, mu: f64, n: usize) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    let s: f64 = (0..n).map(|k| lambdas.at(k).sqrt()).sum();
    let convex = 2.0 * r0_sq / (s * s);
    if mu == 0.0 {
        return convex;
    }
    let prod: f64 = (1..n)
        .map(|k| {
            let lm = lambdas.at(k) * mu;
            1.0 - (lm / (1.0 + lm)).sqrt()
        })
        .product();
    convex.min(prod * r0_sq / (2.0 * lambdas.at(0)))
}

/// Largest admissible `δ` at step size `λ`.
pub fn max_delta(lambda: f64, mu: f64) -> f64 {
    (1.0 + lambda * mu).sqrt()
}

/// Inexact accelerated proximal point method. Each approximate step must pass
/// [`check_relative_error`]; `δ ≤ 1` is required when `μ = 0` and
/// `δ ≤ √(1 + λ_kμ)` otherwise.
pub fn accel_inexact_ppa(
    f: &dyn Objective,
    solver: &mut dyn SubproblemSolver,
    lambdas: &Steps,
    delta: f64,
    x0: &Vector,
    n: usize,
    mu: f64,
) -> Result<Trace, Error> {
    lambdas.validate(n)?;
    if !(mu >= 0.0 && mu <= f.params().mu * (1.0 + 1e-12)) {
        return Err(invalid(format!("mu = {mu} must lie in [0, {}]", f.params().mu)));
    }
    for k in 0..n {
        if !(delta >= 0.0 && delta <= max_delta(lambdas.at(k), mu)) {
            return Err(invalid(format!("delta = {delta} outside [0, sqrt(1 + lambda_{k} mu)]")));
        }
    }
    acc_ppa_core(f, solver, lambdas, delta, x0, n, mu)
}

/// Same iteration without the range check on `δ`; lets tests observe what
/// happens outside the hypotheses of the potential argument.
pub fn accel_inexact_ppa_unguarded(
    f: &dyn Objective,
    solver: &mut dyn SubproblemSolver,
    lambdas: &Steps,
    delta: f64,
    x0: &Vector,
    n: usize,
    mu: f64,
) -> Result<Trace, Error> {
    lambdas.validate(n)?;
    if !(delta >= 0.0 && mu >= 0.0) {
        return Err(invalid("delta and mu must be nonnegative"));
    }
    acc_ppa_core(f, solver, lambdas, delta, x0, n, mu)
}

struct AccPpa {
    mu: f64,
    x: Vector,
    z: Vector,
    acc: f64,
}

impl AccPpa {
    fn new(x0: &Vector, mu: f64) -> Self {
        AccPpa { mu, x: x0.clone(), z: x0.clone(), acc: 0.0 }
    }

    /// Returns `(A_{k+1}, y_k)`.
    fn extrapolate(&self, lambda: f64) -> (f64, Vector) {
        let (a, mu) = (self.acc, self.mu);
        let a1 = acc_ppa_next(a, lambda, mu);
        let c = (a1 - a) * (a * mu + 1.0) / (a1 + 2.0 * mu * a * a1 - mu * a * a);
        let y = &self.x + (&self.z - &self.x) * c;
        (a1, y)
    }

    fn update(&mut self, a1: f64, x_next: Vector, g: &Vector) {
        let s = (a1 - self.acc) / (1.0 + self.mu * a1);
        let z = &self.z + (&x_next - &self.z) * (self.mu * s) - g * s;
        self.z = z;
        self.x = x_next;
        self.acc = a1;
    }

    fn state(&self, y: Option<Vector>, lambda: Option<f64>, delta: f64) -> StepState {
        StepState {
            acc: Some(self.acc),
            lambda,
            delta: Some(delta),
            x: Some(self.x.clone()),
            y,
            z: Some(self.z.clone()),
            ..Default::default()
        }
    }
}

fn acc_ppa_core(
    f: &dyn Objective,
    solver: &mut dyn SubproblemSolver,
    lambdas: &Steps,
    delta: f64,
    x0: &Vector,
    n: usize,
    mu: f64,
) -> Result<Trace, Error> {
    let mut rec = Recorder::smooth(f, Method::AccPpa { mu, delta });
    let mut st = AccPpa::new(x0, mu);
    rec.push(0, x0, st.state(None, None, delta))?;
    for k in 0..n {
        let lambda = lambdas.at(k);
        let (a1, y) = st.extrapolate(lambda);
        let step = solver.solve(f, &y, lambda, delta).map_err(|msg| Error::InnerSolve {
            k,
            msg,
            partial: Box::new(rec.trace.clone()),
        })?;
        rec.grad_calls += step.grad_calls;
        rec.inner_iters += step.inner_iters;
        rec.prox_calls += 1;
        rec.trace.inner_runs.push(step.inner_iters);
        let cert = InexactProxCertificate::new(step.x_next.clone(), y.clone(), lambda, step.g.clone(), delta);
        if !check_relative_error(&cert)? {
            return Err(Error::InnerSolve {
                k,
                msg: format!("relative error {:.3e} exceeds delta = {delta}", cert.ratio()),
                partial: Box::new(rec.trace.clone()),
            });
        }
        st.update(a1, step.x_next, &step.g);
        rec.push(k + 1, &st.x.clone(), st.state(Some(y), Some(lambda), delta))?;
    }
    Ok(rec.finish())
}

/// Linear-rate contract `‖w_k − w⋆‖ ≤ C_M (1 − τ_M)^k ‖w₀ − w⋆‖` of an inner
/// method on the subproblem `Φ`, which is `(L + 1/λ)`-smooth and
/// `1/λ`-strongly convex. Inner runs are always warm-started at `y_k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InnerSolverSpec {
    pub kind: InnerKind,
    pub c_m: f64,
    pub tau_m: f64,
    pub warm_start: bool,
}

impl InnerSolverSpec {
    /// Constants for the subproblems of an `L`-smooth function at step `λ`.
    ///
    /// * `Gd` (step `1/(L + 1/λ)`): `C = 1`, `τ = 1/(1 + λL)`.
    /// * `GdLineSearch` (exact line search): `C = √(1 + λL)`,
    ///   `τ = 2/(2 + λL)`.
    /// * `ConstMomentum`: `C = √(2 + λL)`, `τ = 1 − √(1 − 1/√(1 + λL))`.
    pub fn for_subproblem(kind: InnerKind, l: f64, lambda: f64) -> Self {
        let k = lambda * l + 1.0;
        let (c_m, tau_m) = match kind {
            InnerKind::Gd => (1.0, 1.0 / k),
            InnerKind::GdLineSearch => (k.sqrt(), 2.0 / (k + 1.0)),
            InnerKind::ConstMomentum => ((k + 1.0).sqrt(), 1.0 - (1.0 - 1.0 / k.sqrt()).sqrt()),
        };
        InnerSolverSpec { kind, c_m, tau_m, warm_start: true }
    }

    /// `B_{M,λ} = log(C_M(λL + 2))/log(1/(1 − τ_M)) + 1`.
    pub fn burden(&self, l: f64, lambda: f64) -> f64 {
        if self.tau_m >= 1.0 {
            return 1.0;
        }
        (self.c_m * (lambda * l + 2.0)).ln() / (1.0 / (1.0 - self.tau_m)).ln() + 1.0
    }
}

/// `λ = 1/(L − 2μ)`, suited to gradient descent with untuned steps.
pub fn lambda_gd_suboptimal(l: f64, mu: f64) -> Result<f64, Error> {
    if !(l > 2.0 * mu && mu >= 0.0) {
        return Err(invalid("lambda = 1/(L - 2 mu) requires L > 2 mu"));
    }
    Ok(1.0 / (l - 2.0 * mu))
}

/// `λ = 2/(L − 3μ)`, suited to gradient descent with tuned steps.
pub fn lambda_gd_optimal(l: f64, mu: f64) -> Result<f64, Error> {
    if !(l > 3.0 * mu && mu >= 0.0) {
        return Err(invalid("lambda = 2/(L - 3 mu) requires L > 3 mu"));
    }
    Ok(2.0 / (l - 3.0 * mu))
}

/// Outer bound `2‖x0 − x⋆‖²/(λ N_outer²)`.
pub fn catalyst_bound(r0_sq: f64, lambda: f64, n_outer: usize) -> f64 {
    2.0 * r0_sq / (lambda * (n_outer * n_outer) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CatalystMode {
    Convex,
    StronglyConvex,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CatalystCounters {
    pub spec: InnerSolverSpec,
    pub burden: f64,
    pub n_outer: usize,
    /// `N_inner(k)` for each completed outer step
    pub n_inner: Vec<u64>,
    pub n_useless: u64,
    pub n_total: u64,
}

#[derive(Clone, Debug)]
pub struct CatalystRun {
    pub trace: Trace,
    pub counters: CatalystCounters,
}

/// Runs `M` on `Φ` until the stopping rule holds or the budget is spent.
struct CatalystInner {
    spec: InnerSolverSpec,
    l: f64,
    cap: usize,
    budget: u64,
    used: u64,
    /// iterations of an unfinished run cut by the budget
    cut: Option<u64>,
    cut_calls: u64,
    outer_k: usize,
    violation: Option<(usize, usize)>,
    /// the residual hit rounding level before the criterion could be met
    stalled: bool,
}

impl CatalystInner {
    fn phi_grad(&self, f: &dyn Objective, w: &Vector, y: &Vector, lambda: f64, calls: &mut u64) -> (Vector, Vector) {
        *calls += 1;
        let g = f.gradient(w);
        let gp = &g + (w - y) / lambda;
        (g, gp)
    }
}

impl SubproblemSolver for CatalystInner {
    fn solve(&mut self, f: &dyn Objective, y: &Vector, lambda: f64, delta: f64) -> Result<ProxStep, String> {
        let phi = |w: &Vector| f.value(w) + (w - y).norm_squared() / (2.0 * lambda);
        let l_phi = self.l + 1.0 / lambda;
        let mu_phi = 1.0 / lambda;
        let mut calls = 0u64;
        let mut w = y.clone();
        let mut w_prev = y.clone();
        for i in 0.. {
            let (g, gp) = self.phi_grad(f, &w, y, lambda, &mut calls);
            // the stopping rule λ‖∇Φ(w)‖ ≤ δ‖w − y‖ is the certificate itself
            if lambda * gp.norm() <= delta * (&w - y).norm() {
                self.used += i as u64;
                return Ok(ProxStep { x_next: w, g, inner_iters: i as u64, grad_calls: calls });
            }
            if i >= self.cap {
                let noise = 64.0 * f64::EPSILON * (w.norm() + y.norm() + lambda * g.norm());
                if lambda * gp.norm() <= noise {
                    self.stalled = true;
                    self.cut = Some(i as u64);
                    self.used += i as u64;
                    self.cut_calls = calls;
                    return Err("stalled at machine precision".into());
                }
                self.violation = Some((self.outer_k, i));
                return Err(format!("inner run exceeded cap {}", self.cap));
            }
            if self.used + i as u64 >= self.budget {
                self.cut = Some(i as u64);
                self.cut_calls = calls;
                self.used += i as u64;
                return Err("budget exhausted".into());
            }
            let next = match self.spec.kind {
                InnerKind::Gd => &w - &gp / l_phi,
                InnerKind::GdLineSearch => {
                    let s = golden_section(|s| phi(&(&w - &gp * s)), 0.0, lambda, 60);
                    let a = &w - &gp * s;
                    let b = &w - &gp / l_phi;
                    if phi(&a) <= phi(&b) {
                        a
                    } else {
                        b
                    }
                }
                InnerKind::ConstMomentum => {
                    let sq = (mu_phi / l_phi).sqrt();
                    let beta = (1.0 - sq) / (1.0 + sq);
                    let v = &w + (&w - &w_prev) * beta;
                    let (_, gv) = self.phi_grad(f, &v, y, lambda, &mut calls);
                    &v - gv / l_phi
                }
            };
            w_prev = std::mem::replace(&mut w, next);
        }
        unreachable!()
    }
}

/// Minimizer of a unimodal `h` on `[a, b]` by golden-section search with a
/// fixed number of evaluations.
pub(crate) fn golden_section(h: impl Fn(f64) -> f64, mut a: f64, mut b: f64, evals: usize) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut hc, mut hd) = (h(c), h(d));
    for _ in 2..evals {
        if hc <= hd {
            b = d;
            d = c;
            hd = hc;
            c = b - r * (b - a);
            hc = h(c);
        } else {
            a = c;
            c = d;
            hc = hd;
            d = a + r * (b - a);
            hd = h(d);
        }
    }
    if hc <= hd {
        c
    } else {
        d
    }
}

/// Catalyst: the inexact accelerated proximal point method with each
/// subproblem solved by `inner`, warm-started at `y_k`, under a total budget
/// of inner iterations. An inner run longer than `2⌈B_{M,λ}⌉` is reported as a
/// contract violation.
pub fn catalyst(
    f: &dyn Objective,
    inner: InnerKind,
    lambda: f64,
    budget: u64,
    mode: CatalystMode,
    x0: &Vector,
) -> Result<CatalystRun, Error> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda must be positive"));
    }
    let p = f.params();
    let mu = match mode {
        CatalystMode::Convex => 0.0,
        CatalystMode::StronglyConvex if p.mu > 0.0 => p.mu,
        CatalystMode::StronglyConvex => return Err(invalid("strongly convex mode needs mu > 0")),
    };
    let delta = match mode {
        CatalystMode::Convex => 1.0,
        CatalystMode::StronglyConvex => max_delta(lambda, mu),
    };
    let spec = InnerSolverSpec::for_subproblem(inner, p.l, lambda);
    let burden = spec.burden(p.l, lambda);
    let mut solver = CatalystInner {
        spec,
        l: p.l,
        cap: 2 * burden.ceil() as usize,
        budget,
        used: 0,
        cut: None,
        cut_calls: 0,
        outer_k: 0,
        violation: None,
        stalled: false,
    };
    let mut rec = Recorder::smooth(f, Method::Catalyst { inner, lambda, mu });
    let mut st = AccPpa::new(x0, mu);
    rec.push(0, x0, st.state(None, None, delta))?;
    let mut k = 0;
    while solver.used < budget {
        solver.outer_k = k;
        let (a1, y) = st.extrapolate(lambda);
        match solver.solve(f, &y, lambda, delta) {
            Ok(step) => {
                rec.grad_calls += step.grad_calls;
                rec.inner_iters += step.inner_iters;
                rec.prox_calls += 1;
                rec.trace.inner_runs.push(step.inner_iters);
                // zero inner iterations means ∇f(y) = 0: nothing left to do
                let stationary = step.inner_iters == 0;
                st.update(a1, step.x_next, &step.g);
                k += 1;
                rec.push(k, &st.x.clone(), st.state(Some(y), Some(lambda), delta))?;
                if stationary {
                    rec.trace.meta.insert("stationary".into(), 1.0);
                    break;
                }
            }
            Err(msg) => {
                if let Some((k, iters)) = solver.violation {
                    return Err(Error::ContractViolation { k, iters, cap: solver.cap });
                }
                if solver.stalled {
                    rec.grad_calls += solver.cut_calls;
                    rec.trace.meta.insert("stalled".into(), 1.0);
                    break;
                }
                if solver.cut.is_some() {
                    // calls of the cut run are still spent
                    rec.grad_calls += solver.cut_calls;
                    break;
                }
                return Err(Error::InnerSolve { k, msg, partial: Box::new(rec.trace.clone()) });
            }
        }
    }
    let n_inner = rec.trace.inner_runs.clone();
    let n_useless = solver.cut.unwrap_or(0);
    let n_total = n_useless + n_inner.iter().sum::<u64>();
    let mut trace = rec.finish();
    trace.meta.insert("burden".into(), burden);
    trace.meta.insert("n_outer".into(), k as f64);
    trace.meta.insert("n_useless".into(), n_useless as f64);
    trace.meta.insert("n_total".into(), n_total as f64);
    trace.meta.insert("c_m".into(), spec.c_m);
    trace.meta.insert("tau_m".into(), spec.tau_m);
    Ok(CatalystRun {
        trace,
        counters: CatalystCounters { spec, burden, n_outer: k, n_inner, n_useless, n_total },
    })
}
