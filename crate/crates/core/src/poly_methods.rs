//! Methods analysed through polynomials of the Hessian on quadratics:
//! fixed-step gradient descent, Chebyshev's semi-iterative method, its
//! heavy-ball limit and conjugate gradients.

use crate::driver::Recorder;
use crate::error::{invalid, Error};
use crate::oracles::{ClassParams, Objective, Vector};
use crate::trace::{Method, StepState, Trace};

/// `x_{k+1} = x_k - gamma ∇f(x_k)`.
///
/// Records carry the accumulator `A_k` of the gradient-descent potential
/// (`A_{k+1} = (1 + A_k)/(1 - q)`, which is `A_k + 1` when `mu = 0`), so the
/// trace can be certified afterwards.
pub fn gradient_descent(f: &dyn Objective, gamma: f64, x0: &Vector, n: usize) -> Result<Trace, Error> {
    if !(gamma > 0.0) {
        return Err(invalid("step size must be positive"));
    }
    let p = f.params();
    let q = p.q();
    let mut rec = Recorder::smooth(f, Method::Gd { gamma, mu: p.mu, l: p.l });
    let mut x = x0.clone();
    let mut acc = 0.0;
    rec.push(0, &x, StepState { acc: Some(acc), ..Default::default() })?;
    for k in 0..n {
        let g = rec.grad(&x);
        x -= g * gamma;
        acc = (1.0 + acc) / (1.0 - q);
        rec.push(k + 1, &x, StepState { acc: Some(acc), ..Default::default() })?;
    }
    Ok(rec.finish())
}

fn require_strongly_convex(p: &ClassParams) -> Result<(), Error> {
    if !(p.mu > 0.0 && p.mu < p.l) {
        return Err(invalid(format!("method needs 0 < mu < L, got mu={}, L={}", p.mu, p.l)));
    }
    Ok(())
}

/// `δ_1 = (L-μ)/(L+μ)`, `δ_k = 1/(2(L+μ)/(L-μ) - δ_{k-1})`.
pub fn chebyshev_deltas(p: &ClassParams, n: usize) -> Vec<f64> {
    let r = (p.l + p.mu) / (p.l - p.mu);
    let mut out = Vec::with_capacity(n);
    let mut d = (p.l - p.mu) / (p.l + p.mu);
    for k in 0..n {
        if k > 0 {
            d = 1.0 / (2.0 * r - d);
        }
        out.push(d);
    }
    out
}

/// Limit of the Chebyshev coefficients, `(√L - √μ)/(√L + √μ)`.
pub fn delta_infinity(p: &ClassParams) -> f64 {
    let (sl, sm) = (p.l.sqrt(), p.mu.sqrt());
    (sl - sm) / (sl + sm)
}

/// Worst-case distance ratio after `n` Chebyshev steps, `2/(ξ^n + ξ^-n)`
/// with `ξ = (√κ + 1)/(√κ - 1)`.
pub fn chebyshev_bound(p: &ClassParams, n: usize) -> f64 {
    let sk = p.kappa().sqrt();
    let xi = (sk + 1.0) / (sk - 1.0);
    let n = n as f64;
    // 2/(ξ^n + ξ^-n) written to avoid overflow for large n
    2.0 * (-n * xi.ln()).exp() / (1.0 + (-2.0 * n * xi.ln()).exp())
}

/// Chebyshev's semi-iterative method for `mu`-strongly convex quadratics.
/// Implemented exactly by the three-term recursion; it is known to be
/// numerically fragile for long runs.
pub fn chebyshev(p: &ClassParams, f: &dyn Objective, x0: &Vector, n: usize) -> Result<Trace, Error> {
    require_strongly_convex(p)?;
    let (l, mu) = (p.l, p.mu);
    let mut rec = Recorder::smooth(f, Method::Chebyshev { mu, l });
    rec.push(0, x0, StepState::default())?;
    if n == 0 {
        return Ok(rec.finish());
    }
    let deltas = chebyshev_deltas(p, n);
    let mut x_prev = x0.clone();
    let g0 = rec.grad(x0);
    let mut x = x0 - g0 * (2.0 / (l + mu));
    rec.push(1, &x, StepState { delta: Some(deltas[0]), ..Default::default() })?;
    let r = (l + mu) / (l - mu);
    for k in 2..=n {
        let d = deltas[k - 1];
        let g = rec.grad(&x);
        let next = &x - g * (4.0 * d / (l - mu)) + (&x_prev - &x) * (1.0 - 2.0 * d * r);
        x_prev = std::mem::replace(&mut x, next);
        rec.push(k, &x, StepState { delta: Some(d), ..Default::default() })?;
    }
    Ok(rec.finish())
}

/// Polyak's heavy-ball method with the limiting Chebyshev coefficients:
/// step `4/(√L+√μ)²`, momentum `((√L-√μ)/(√L+√μ))²`.
pub fn heavy_ball(p: &ClassParams, f: &dyn Objective, x0: &Vector, n: usize) -> Result<Trace, Error> {
    require_strongly_convex(p)?;
    let (sl, sm) = (p.l.sqrt(), p.mu.sqrt());
    let step = 4.0 / ((sl + sm) * (sl + sm));
    let beta = delta_infinity(p).powi(2);
    let mut rec = Recorder::smooth(f, Method::HeavyBall { mu: p.mu, l: p.l });
    let mut x_prev = x0.clone();
    let mut x = x0.clone();
    rec.push(0, &x, StepState::default())?;
    for k in 0..n {
        let g = rec.grad(&x);
        let next = &x - g * step + (&x - &x_prev) * beta;
        x_prev = std::mem::replace(&mut x, next);
        rec.push(k + 1, &x, StepState { delta: Some(beta), ..Default::default() })?;
    }
    Ok(rec.finish())
}

/// Conjugate gradients on a quadratic oracle (classical residual recurrence,
/// which realizes the Krylov-subspace argmin). Each Hessian-vector product is
/// counted as one gradient call.
pub fn conjugate_gradient_quadratic(f: &dyn Objective, x0: &Vector, n: usize) -> Result<Trace, Error> {
    let quad = f
        .as_quadratic()
        .ok_or_else(|| Error::Unsupported(format!("conjugate gradients need a quadratic oracle, got {}", f.name())))?;
    let mut rec = Recorder::smooth(f, Method::ConjugateGradient);
    let mut x = x0.clone();
    let mut r = -rec.grad(&x);
    let r0 = r.norm();
    let mut p = r.clone();
    let mut rr = r.norm_squared();
    rec.push(0, &x, StepState::default())?;
    for k in 0..n {
        // exact stop: the Krylov space is exhausted, the argmin stays put
        if rr.sqrt() <= 1e-15 * r0.max(f64::MIN_POSITIVE) || rr == 0.0 {
            rec.push(k + 1, &x, StepState { fallback: true, ..Default::default() })?;
            continue;
        }
        rec.grad_calls += 1;
        let hp = quad.apply(&p);
        let alpha = rr / p.dot(&hp);
        x += &p * alpha;
        r -= hp * alpha;
        let rr_new = r.norm_squared();
        p = &r + &p * (rr_new / rr);
        rr = rr_new;
        rec.push(k + 1, &x, StepState::default())?;
    }
    Ok(rec.finish())
}
