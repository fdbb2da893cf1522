//! Nesterov-type methods for smooth (strongly) convex minimization, their
//! optimized relatives, the monotone wrapper and the Bregman variant.

use crate::composite;
use crate::driver::{run, run_monotone, Recorder, Stepper};
use crate::error::{invalid, Error};
use crate::oracles::{CompositeProblem, Objective, Vector};
use crate::trace::{Dgf, Form, Method, StepState, Trace};

// ----------------------------------------------------------- coefficients

/// `θ_{0..N,N}` of the optimized gradient method.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaSchedule {
    pub n: usize,
    pub theta: Vec<f64>,
}

impl ThetaSchedule {
    pub fn last(&self) -> f64 {
        self.theta[self.n]
    }
}

pub fn theta_schedule(n: usize) -> Result<ThetaSchedule, Error> {
    if n == 0 {
        return Err(invalid("theta schedule needs N >= 1"));
    }
    let mut theta = vec![1.0];
    for k in 0..n {
        let t: f64 = theta[k];
        let c: f64 = if k + 1 == n { 8.0 } else { 4.0 };
        theta.push((1.0 + (c * t * t + 1.0).sqrt()) / 2.0);
    }
    Ok(ThetaSchedule { n, theta })
}

/// Growth rule of the `A_k` accumulator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Regime {
    Convex,
    /// Nesterov's strongly convex rule with `q = mu/L`.
    StronglyConvex(f64),
    /// Information-theoretic exact method with `q = mu/L`.
    Item(f64),
}

pub fn next_acc(regime: Regime, a: f64) -> f64 {
    match regime {
        Regime::Convex => a + (1.0 + (4.0 * a + 1.0).sqrt()) / 2.0,
        Regime::StronglyConvex(q) => (2.0 * a + 1.0 + (4.0 * a + 4.0 * q * a * a + 1.0).sqrt()) / (2.0 * (1.0 - q)),
        Regime::Item(q) => {
            ((1.0 + q) * a + 2.0 * (1.0 + ((1.0 + a) * (1.0 + q * a)).sqrt())) / ((1.0 - q) * (1.0 - q))
        }
    }
}

/// `A_0 = 0, A_1, ..., A_n`.
pub fn acc_sequence(regime: Regime, n: usize) -> Vec<f64> {
    let mut out = vec![0.0];
    for k in 0..n {
        out.push(next_acc(regime, out[k]));
    }
    out
}

/// `(τ_k, δ_k)` of the strongly convex method in its A-parameterization;
/// reduces to `(1 - A_k/A_{k+1}, A_{k+1} - A_k)` at `q = 0`.
pub fn fgm_coefficients(a: f64, a1: f64, q: f64) -> (f64, f64) {
    let tau = (a1 - a) * (1.0 + q * a) / (a1 + 2.0 * q * a * a1 - q * a * a);
    let delta = (a1 - a) / (1.0 + q * a1);
    (tau, delta)
}

/// Momentum coefficient of form II, derived from three consecutive `A`s.
pub fn fgm_beta(a0: f64, a1: f64, a2: f64, q: f64) -> f64 {
    (a2 - a1) * (a1 * (1.0 - q) - a0 - 1.0) / (a2 * (2.0 * q * a1 + 1.0) - q * a1 * a1)
}

pub fn item_coefficients(a: f64, a1: f64, q: f64) -> (f64, f64) {
    let tau = 1.0 - a / ((1.0 - q) * a1);
    let delta = 0.5 * ((1.0 - q) * (1.0 - q) * a1 - (1.0 + q) * a) / (1.0 + q + q * a);
    (tau, delta)
}

// ------------------------------------------------------------------ bounds

/// `L ‖x0 - x*‖² / (2 θ_{N,N}²)`
pub fn ogm_bound(l: f64, r0_sq: f64, n: usize) -> Result<f64, Error> {
    let th = theta_schedule(n)?.last();
    Ok(l * r0_sq / (2.0 * th * th))
}

/// `min{2/N², (1-√q)^N} L ‖x0 - x*‖²`
pub fn fgm_bound(l: f64, mu: f64, r0_sq: f64, n: usize) -> f64 {
    let q: f64 = mu / l;
    let nf = n as f64;
    let a = if n == 0 { f64::INFINITY } else { 2.0 / (nf * nf) };
    a.min((1.0 - q.sqrt()).powf(nf)) * l * r0_sq
}

/// `(1-√q)^N (f(x0) - f* + μ/2 ‖x0 - x*‖²)`
pub fn const_momentum_bound(f0_gap: f64, mu: f64, l: f64, r0_sq: f64, n: usize) -> f64 {
    (1.0 - (mu / l).sqrt()).powf(n as f64) * (f0_gap + 0.5 * mu * r0_sq)
}

/// `‖x0 - x*‖² / (1 + q A_N)` with the ITEM accumulator.
pub fn item_bound(r0_sq: f64, q: f64, n: usize) -> f64 {
    let a = *acc_sequence(Regime::Item(q), n).last().unwrap();
    r0_sq / (1.0 + q * a)
}

fn check_mu(mu: f64, l: f64) -> Result<(), Error> {
    if !(mu >= 0.0 && mu < l) {
        return Err(invalid(format!("need 0 <= mu < L, got mu={mu}, L={l}")));
    }
    Ok(())
}

fn check_dim(f: &dyn Objective, x0: &Vector) -> Result<(), Error> {
    if x0.len() != f.dim() {
        return Err(invalid(format!("x0 has dimension {}, problem has {}", x0.len(), f.dim())));
    }
    Ok(())
}

// --------------------------------------------------------------------- OGM

/// Optimized gradient method with budget `n`. The reported sequence is `y_k`
/// (the last one uses `θ_{N,N}`).
pub fn ogm(f: &dyn Objective, x0: &Vector, n: usize, form: Form) -> Result<Trace, Error> {
    check_dim(f, x0)?;
    if form == Form::III {
        return Err(invalid("the optimized gradient method has forms I and II only"));
    }
    let l = f.params().l;
    let mut rec = Recorder::smooth(f, Method::Ogm { form, n, l });
    let st = |th: f64, x: &Vector, y: &Vector, z: &Vector| StepState {
        theta: Some(th),
        x: Some(x.clone()),
        y: Some(y.clone()),
        z: Some(z.clone()),
        ..Default::default()
    };
    rec.push(0, x0, st(1.0, x0, x0, x0))?;
    if n == 0 {
        return Ok(rec.finish());
    }
    let theta = theta_schedule(n)?.theta;
    let (mut x, mut y, mut z) = (x0.clone(), x0.clone(), x0.clone());
    for k in 0..n {
        let g = rec.grad(&y);
        let x1 = &y - &g / l;
        let th1 = theta[k + 1];
        match form {
            Form::I => {
                z -= &g * (2.0 * theta[k] / l);
                y = &x1 * (1.0 - 1.0 / th1) + &z / th1;
            }
            _ => {
                let y1 = &x1 + (&x1 - &x) * ((theta[k] - 1.0) / th1) + (&x1 - &y) * (theta[k] / th1);
                y = y1;
                z = &y * th1 - &x1 * (th1 - 1.0);
            }
        }
        x = x1;
        rec.push(k + 1, &y, st(th1, &x, &y, &z))?;
    }
    Ok(rec.finish())
}

// --------------------------------------------------------------------- FGM

pub(crate) struct FgmStepper {
    l: f64,
    q: f64,
    form: Form,
    x: Vector,
    y: Vector,
    z: Vector,
    acc: f64,
    tau: f64,
    delta: f64,
}

impl FgmStepper {
    pub(crate) fn new(x0: &Vector, l: f64, mu: f64, form: Form) -> Self {
        FgmStepper { l, q: mu / l, form, x: x0.clone(), y: x0.clone(), z: x0.clone(), acc: 0.0, tau: 1.0, delta: 0.0 }
    }
}

impl Stepper for FgmStepper {
    fn x(&self) -> &Vector {
        &self.x
    }
    fn set_x(&mut self, x: Vector) {
        self.x = x;
    }
    fn step(&mut self, rec: &mut Recorder) -> Result<(), Error> {
        let (q, l) = (self.q, self.l);
        let regime = Regime::StronglyConvex(q);
        let a = self.acc;
        let a1 = next_acc(regime, a);
        match self.form {
            Form::I | Form::III => {
                let (tau, delta) = fgm_coefficients(a, a1, q);
                let y = &self.x + (&self.z - &self.x) * tau;
                let g = rec.grad(&y);
                self.z = &self.z * (1.0 - q * delta) + &y * (q * delta) - &g * (delta / l);
                self.x = if self.form == Form::I {
                    &y - &g / l
                } else {
                    &self.x * (a / a1) + &self.z * (1.0 - a / a1)
                };
                self.y = y;
                self.tau = tau;
                self.delta = delta;
            }
            Form::II => {
                let g = rec.grad(&self.y);
                let x1 = &self.y - &g / l;
                let a2 = next_acc(regime, a1);
                let beta = fgm_beta(a, a1, a2, q);
                // z is not part of form II; it is reconstructed for the certificate
                self.z = (&x1 * a1 - &self.x * a) / (a1 - a);
                self.y = &x1 + (&x1 - &self.x) * beta;
                self.x = x1;
                self.tau = beta;
            }
        }
        self.acc = a1;
        Ok(())
    }
    fn state(&self) -> StepState {
        StepState {
            acc: Some(self.acc),
            tau: Some(self.tau),
            delta: Some(self.delta),
            l_est: Some(self.l),
            x: Some(self.x.clone()),
            y: Some(self.y.clone()),
            z: Some(self.z.clone()),
            ..Default::default()
        }
    }
}

/// Nesterov's fast gradient method in forms I/II/III. `mu = 0` gives the
/// convex method, `mu > 0` the strongly convex one; all forms generate the
/// same `x_k`.
pub fn fgm(f: &dyn Objective, x0: &Vector, n: usize, form: Form, mu: f64) -> Result<Trace, Error> {
    check_dim(f, x0)?;
    let l = f.params().l;
    check_mu(mu, l)?;
    let rec = Recorder::smooth(f, Method::Fgm { form, mu, l });
    run(FgmStepper::new(x0, l, mu, form), rec, n)
}

// --------------------------------------------------------- constant momentum

pub(crate) struct ConstMomentumStepper {
    l: f64,
    mu: f64,
    sq: f64,
    form: Form,
    x: Vector,
    y: Vector,
    z: Vector,
}

impl ConstMomentumStepper {
    pub(crate) fn new(x0: &Vector, l: f64, mu: f64, form: Form) -> Self {
        ConstMomentumStepper { l, mu, sq: (mu / l).sqrt(), form, x: x0.clone(), y: x0.clone(), z: x0.clone() }
    }
}

impl Stepper for ConstMomentumStepper {
    fn x(&self) -> &Vector {
        &self.x
    }
    fn set_x(&mut self, x: Vector) {
        self.x = x;
    }
    fn step(&mut self, rec: &mut Recorder) -> Result<(), Error> {
        let (l, mu, sq) = (self.l, self.mu, self.sq);
        let c = sq / (1.0 + sq);
        match self.form {
            Form::II => {
                let g = rec.grad(&self.y);
                let x1 = &self.y - &g / l;
                let y1 = &x1 + (&x1 - &self.x) * ((1.0 - sq) / (1.0 + sq));
                self.z = &x1 + (&y1 - &x1) / c;
                self.x = x1;
                self.y = y1;
            }
            _ => {
                let y = &self.x + (&self.z - &self.x) * c;
                let g = rec.grad(&y);
                self.x = &y - &g / l;
                self.z = &self.z * (1.0 - sq) + (&y - &g / mu) * sq;
                self.y = y;
            }
        }
        Ok(())
    }
    fn state(&self) -> StepState {
        StepState {
            x: Some(self.x.clone()),
            y: Some(self.y.clone()),
            z: Some(self.z.clone()),
            ..Default::default()
        }
    }
}

/// Nesterov's method with constant momentum `(1-√q)/(1+√q)` (needs `mu > 0`).
pub fn constant_momentum(f: &dyn Objective, x0: &Vector, n: usize, form: Form) -> Result<Trace, Error> {
    check_dim(f, x0)?;
    let p = f.params();
    if !(p.mu > 0.0) {
        return Err(invalid("constant momentum needs mu > 0"));
    }
    if form == Form::III {
        return Err(invalid("constant momentum has forms I and II only"));
    }
    let rec = Recorder::smooth(f, Method::ConstMomentum { form, mu: p.mu, l: p.l });
    run(ConstMomentumStepper::new(x0, p.l, p.mu, form), rec, n)
}

// -------------------------------------------------------------------- ITEM

/// Information-theoretic exact method. The reported sequence is `z_k`, on
/// which the distance guarantee is stated; `state.y` holds `y_{k-1}`.
pub fn item(f: &dyn Objective, x0: &Vector, n: usize) -> Result<Trace, Error> {
    check_dim(f, x0)?;
    let p = f.params();
    let (l, q) = (p.l, p.q());
    let mut rec = Recorder::smooth(f, Method::Item { mu: p.mu, l });
    let (mut x, mut z) = (x0.clone(), x0.clone());
    let mut acc = 0.0;
    rec.push(0, &z, StepState { acc: Some(0.0), x: Some(x.clone()), z: Some(z.clone()), ..Default::default() })?;
    for k in 0..n {
        let a1 = next_acc(Regime::Item(q), acc);
        let (tau, delta) = item_coefficients(acc, a1, q);
        let y = &x + (&z - &x) * tau;
        let g = rec.grad(&y);
        x = &y - &g / l;
        z = &z * (1.0 - q * delta) + &y * (q * delta) - &g * (delta / l);
        acc = a1;
        rec.push(
            k + 1,
            &z,
            StepState {
                acc: Some(acc),
                tau: Some(tau),
                delta: Some(delta),
                x: Some(x.clone()),
                y: Some(y),
                z: Some(z.clone()),
                ..Default::default()
            },
        )?;
    }
    Ok(rec.finish())
}

// --------------------------------------------------------------------- TMM

/// Triple momentum method (needs `mu > 0`). Record `k` reports `y_{k-1}`
/// (with `y_{-1} = x0`) and carries `z_k`.
pub fn tmm(f: &dyn Objective, x0: &Vector, n: usize) -> Result<Trace, Error> {
    check_dim(f, x0)?;
    let p = f.params();
    if !(p.mu > 0.0) {
        return Err(invalid("the triple momentum method is defined only for mu > 0"));
    }
    let (l, mu, sq) = (p.l, p.mu, p.q().sqrt());
    let beta = (1.0 - sq) / (1.0 + sq);
    let mut rec = Recorder::smooth(f, Method::Tmm { mu, l });
    let mut y = x0.clone();
    let mut z = x0.clone();
    let st = |y: &Vector, z: &Vector| StepState { y: Some(y.clone()), z: Some(z.clone()), ..Default::default() };
    rec.push(0, &y, st(&y, &z))?;
    let mut g = rec.grad(&y);
    for k in 0..n {
        y = (&y - &g / l) * beta + &z * (1.0 - beta);
        g = rec.grad(&y);
        z = (&y - &g / mu) * sq + &z * (1.0 - sq);
        rec.push(k + 1, &y, st(&y, &z))?;
    }
    Ok(rec.finish())
}

// ----------------------------------------------------------------- Bregman

pub(crate) struct BregmanStepper {
    l: f64,
    dgf: Dgf,
    x: Vector,
    y: Vector,
    z: Vector,
    acc: f64,
}

/// Mirror step on the simplex with the entropy: `z_i ∝ z_i exp(-s g_i)`.
pub fn entropy_step(z: &Vector, g: &Vector, s: f64) -> Vector {
    let logits: Vec<f64> = z.iter().zip(g.iter()).map(|(&zi, &gi)| zi.ln() - s * gi).collect();
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logits.iter().map(|t| (t - m).exp()).collect();
    let tot: f64 = w.iter().sum();
    Vector::from_iterator(w.len(), w.into_iter().map(|t| t / tot))
}

/// Bregman divergence `D_w(x; z)` of the distance-generating function.
pub fn bregman_divergence(dgf: Dgf, x: &Vector, z: &Vector) -> f64 {
    match dgf {
        Dgf::Euclidean => 0.5 * (x - z).norm_squared(),
        Dgf::Entropy => x
            .iter()
            .zip(z.iter())
            .map(|(&xi, &zi)| if xi > 0.0 { xi * (xi / zi).ln() } else { 0.0 } + zi - xi)
            .sum(),
    }
}

impl Stepper for BregmanStepper {
    fn x(&self) -> &Vector {
        &self.x
    }
    fn set_x(&mut self, x: Vector) {
        self.x = x;
    }
    fn step(&mut self, rec: &mut Recorder) -> Result<(), Error> {
        let a = (1.0 + (4.0 * self.acc + 1.0).sqrt()) / 2.0;
        let a1 = self.acc + a;
        let w = self.acc / a1;
        let y = &self.x * w + &self.z * (1.0 - w);
        let g = rec.grad(&y);
        let s = a / self.l;
        self.z = match self.dgf {
            Dgf::Euclidean => rec.prox_h(&(&self.z - &g * s), s),
            Dgf::Entropy => entropy_step(&self.z, &g, s),
        };
        self.x = &self.x * w + &self.z * (1.0 - w);
        self.y = y;
        self.acc = a1;
        Ok(())
    }
    fn state(&self) -> StepState {
        StepState {
            acc: Some(self.acc),
            x: Some(self.x.clone()),
            y: Some(self.y.clone()),
            z: Some(self.z.clone()),
            l_est: Some(self.l),
            ..Default::default()
        }
    }
}

pub(crate) fn bregman_stepper(problem: &CompositeProblem, dgf: Dgf, x0: &Vector) -> Result<BregmanStepper, Error> {
    if x0.len() != problem.dim() {
        return Err(invalid("x0 dimension mismatch"));
    }
    if dgf == Dgf::Entropy {
        if problem.h.name() != "simplex" {
            return Err(invalid("entropy mode needs h = indicator of the simplex"));
        }
        if x0.iter().any(|&t| !(t > 0.0)) || (x0.sum() - 1.0).abs() > 1e-12 {
            return Err(invalid("entropy mode needs a strictly positive x0 on the simplex"));
        }
    }
    Ok(BregmanStepper {
        l: problem.f.params().l,
        dgf,
        x: x0.clone(),
        y: x0.clone(),
        z: x0.clone(),
        acc: 0.0,
    })
}

/// Accelerated Bregman proximal gradient method. Euclidean mode uses the prox
/// of `h`; entropy mode requires `h` to be the simplex indicator and uses the
/// closed-form mirror step.
pub fn bregman_agm(problem: &CompositeProblem, dgf: Dgf, x0: &Vector, n: usize) -> Result<Trace, Error> {
    let s = bregman_stepper(problem, dgf, x0)?;
    let rec = Recorder::composite(problem, Method::Bregman { dgf, l: s.l });
    run(s, rec, n)
}

/// `4 L D_w(x*; z0) / N²`
pub fn bregman_bound(l: f64, d0: f64, n: usize) -> f64 {
    4.0 * l * d0 / ((n * n) as f64)
}

// ---------------------------------------------------------------- monotone

/// Monotone wrapper: after each iteration keep whichever of the new point and
/// the previous best has lower objective, and feed it back as `x_k`.
///
/// `method` describes the inner algorithm; its fields (form, mu, backtracking
/// settings) are honoured, while `l` fields are taken from the problem.
pub fn monotone_wrap(method: &Method, problem: &CompositeProblem, x0: &Vector, n: usize) -> Result<Trace, Error> {
    if x0.len() != problem.dim() {
        return Err(invalid("x0 dimension mismatch"));
    }
    let l = problem.f.params().l;
    let smooth_only = |name: &str| -> Result<(), Error> {
        if problem.h.is_zero() {
            Ok(())
        } else {
            Err(invalid(format!("{name} handles smooth problems only; use fista or prox_agm")))
        }
    };
    let tag = |m: Method| Method::Monotone(Box::new(m));
    match method {
        Method::Fgm { form, mu, .. } => {
            smooth_only("fgm")?;
            check_mu(*mu, l)?;
            let rec = Recorder::composite(problem, tag(Method::Fgm { form: *form, mu: *mu, l }));
            run_monotone(FgmStepper::new(x0, l, *mu, *form), rec, n)
        }
        Method::ConstMomentum { form, .. } => {
            smooth_only("constant momentum")?;
            let mu = problem.f.params().mu;
            if !(mu > 0.0) || *form == Form::III {
                return Err(invalid("constant momentum needs mu > 0 and form I or II"));
            }
            let rec = Recorder::composite(problem, tag(Method::ConstMomentum { form: *form, mu, l }));
            run_monotone(ConstMomentumStepper::new(x0, l, mu, *form), rec, n)
        }
        Method::Fista { mode, mu, l0, alpha } | Method::ProxAgm { mode, mu, l0, alpha } => {
            let prox_on_z = matches!(method, Method::ProxAgm { .. });
            let s = composite::stepper(x0, *mode, *mu, *l0, *alpha, prox_on_z)?;
            let rec = Recorder::composite(problem, tag(method.clone()));
            run_monotone(s, rec, n)
        }
        Method::Bregman { dgf, .. } => {
            let s = bregman_stepper(problem, *dgf, x0)?;
            let rec = Recorder::composite(problem, tag(Method::Bregman { dgf: *dgf, l }));
            run_monotone(s, rec, n)
        }
        Method::Ogm { .. } | Method::Item { .. } | Method::Tmm { .. } => Err(invalid(format!(
            "the monotone wrapper does not apply to {}: its potential does not involve F(x_k)",
            method.name()
        ))),
        other => Err(invalid(format!("{} cannot be wrapped", other.name()))),
    }
}
