//! Method dispatch: turns a resolved configuration into a trace and, when a
//! guarantee applies, the bound it should satisfy.

use accel::composite::{ell, fista, fista_bound, prox_agm};
use accel::extrapolation::{online_rna, Safeguard};
use accel::momentum::{
    bregman_agm, bregman_bound, bregman_divergence, const_momentum_bound, constant_momentum, fgm, fgm_bound, item,
    item_bound, monotone_wrap, ogm, ogm_bound, tmm,
};
use accel::poly_methods::{chebyshev, chebyshev_bound, conjugate_gradient_quadratic, gradient_descent, heavy_ball};
use accel::prox_outer::{
    accel_inexact_ppa, accel_ppa_bound, catalyst, catalyst_bound, ppa, ppa_bound, CatalystMode, ExactProxSolver,
    GdSubproblemSolver, Steps,
};
use accel::restart::{adaptive_bound, fixed_restart, grid_restart, halving_epoch, scheduled_bound, scheduled_restart};
use accel::restart::{HebParams, RestartInner};
use accel::trace::{BacktrackMode, Dgf, Form, InnerKind, Method};
use accel::{ClassParams, CompositeProblem, Error, Trace, Vector};
use serde::Serialize;

use crate::config::Resolved;

/// Quantity a guarantee bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// `F(x_N) − F⋆` of the reported iterate
    Gap,
    /// `‖x_N − x⋆‖`
    Dist,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bound {
    pub value: f64,
    pub quantity: Quantity,
}

impl Bound {
    fn gap(value: f64) -> Option<Bound> {
        Some(Bound { value, quantity: Quantity::Gap })
    }
}

pub struct Outcome {
    pub trace: Trace,
    pub bound: Option<Bound>,
    /// extra scalars for the summary (e.g. Catalyst counters)
    pub extra: Vec<(String, f64)>,
}

/// Failures of a run, split by the exit code they map to.
pub enum RunError {
    /// bad configuration (exit 2)
    Config(String),
    /// the method diverged; the partial trace is still written (exit 3)
    Diverged(Box<Trace>, String),
    /// anything else (exit 1)
    Other(String),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Diverged { k, partial } => RunError::Diverged(partial, format!("diverged at step {k}")),
            Error::InvalidArgument(m) | Error::Unsupported(m) => RunError::Config(m),
            other => RunError::Other(other.to_string()),
        }
    }
}

fn bad(msg: impl Into<String>) -> RunError {
    RunError::Config(msg.into())
}

fn parse_form(s: Option<&str>) -> Result<Form, RunError> {
    match s.unwrap_or("I") {
        "I" | "i" | "1" => Ok(Form::I),
        "II" | "ii" | "2" => Ok(Form::II),
        "III" | "iii" | "3" => Ok(Form::III),
        other => Err(bad(format!("unknown form {other:?} (I, II, III)"))),
    }
}

fn parse_backtrack(s: Option<&str>) -> Result<BacktrackMode, RunError> {
    let s = s.unwrap_or("monotone");
    match s.split_once(':') {
        None if s == "monotone" => Ok(BacktrackMode::Monotone),
        None if s == "reset" => Ok(BacktrackMode::Reset),
        None if s == "decrease" => Ok(BacktrackMode::Decrease(0.5)),
        Some(("decrease", b)) => {
            b.parse().map(BacktrackMode::Decrease).map_err(|_| bad(format!("bad decrease factor {b:?}")))
        }
        _ => Err(bad(format!("unknown backtracking mode {s:?} (monotone, reset, decrease[:beta])"))),
    }
}

fn parse_dgf(s: Option<&str>) -> Result<Dgf, RunError> {
    match s.unwrap_or("euclidean") {
        "euclidean" => Ok(Dgf::Euclidean),
        "entropy" => Ok(Dgf::Entropy),
        other => Err(bad(format!("unknown distance-generating function {other:?} (euclidean, entropy)"))),
    }
}

fn parse_steps(s: Option<&str>, lambda: f64) -> Result<Steps, RunError> {
    let s = s.unwrap_or("constant");
    match s.split_once(':') {
        None if s == "constant" => Ok(Steps::Constant(lambda)),
        Some(("geometric", r)) => {
            let ratio = r.parse().map_err(|_| bad(format!("bad geometric ratio {r:?}")))?;
            Ok(Steps::Geometric { lambda0: lambda, ratio })
        }
        _ => Err(bad(format!("unknown step schedule {s:?} (constant, geometric:ratio)"))),
    }
}

/// Starting point after applying the `x0` option.
pub fn starting_point(cfg: &Resolved, problem: &CompositeProblem, random: Vector) -> Result<Vector, RunError> {
    match cfg.x0.as_str() {
        "opt" => problem.optimum.as_ref().map(|o| o.x.clone()).ok_or_else(|| bad("problem has no known optimum")),
        _ => Ok(random),
    }
}

struct Ctx<'a> {
    cfg: &'a Resolved,
    problem: &'a CompositeProblem,
    x0: &'a Vector,
    p: ClassParams,
    r0_sq: f64,
    f0_gap: f64,
}

impl Ctx<'_> {
    fn smooth_only(&self) -> Result<(), RunError> {
        if self.problem.h.is_zero() {
            Ok(())
        } else {
            Err(bad(format!("{} needs a smooth problem (no nonsmooth term)", self.cfg.method)))
        }
    }

    /// Method-level μ: `--mu`, else 0.
    fn mu(&self) -> f64 {
        self.cfg.mu.unwrap_or(0.0)
    }

    /// Method-level L: `--L`, else the oracle constant.
    fn l(&self) -> f64 {
        self.cfg.l.unwrap_or(self.p.l)
    }

    fn lambda(&self) -> f64 {
        self.cfg.lambda.unwrap_or(1.0 / self.p.l)
    }

    fn backtracking_l0(&self, mu: f64) -> f64 {
        self.cfg.l.unwrap_or_else(|| (self.p.l / 4.0).max(2.0 * mu))
    }
}

const ALPHA: f64 = 2.0;

pub fn run_method(cfg: &Resolved, problem: &CompositeProblem, x0: &Vector) -> Result<Outcome, RunError> {
    let p = problem.f.params();
    let (r0_sq, f0_gap) = match &problem.optimum {
        Some(o) => ((x0 - &o.x).norm_squared(), problem.value(x0) - o.f),
        None => (f64::NAN, f64::NAN),
    };
    let ctx = Ctx { cfg, problem, x0, p, r0_sq, f0_gap };
    let mut out = dispatch(&ctx)?;
    if problem.optimum.is_none() {
        out.bound = None;
    }
    Ok(out)
}

fn plain(trace: Trace, bound: Option<Bound>) -> Outcome {
    Outcome { trace, bound, extra: Vec::new() }
}

fn dispatch(c: &Ctx) -> Result<Outcome, RunError> {
    let f = c.problem.f.as_ref();
    let (x0, n, p) = (c.x0, c.cfg.n, c.p);
    let name = c.cfg.method.as_str();
    if let Some(inner) = name.strip_prefix("monotone:") {
        return monotone(c, inner);
    }
    match name {
        "gd" => {
            c.smooth_only()?;
            let gamma = 1.0 / c.l();
            let t = gradient_descent(f, gamma, x0, n)?;
            let bound = if gamma <= 1.0 / p.l && n > 0 { Bound::gap(c.r0_sq / (2.0 * gamma * n as f64)) } else { None };
            Ok(plain(t, bound))
        }
        "chebyshev" | "heavy_ball" => {
            c.smooth_only()?;
            let cp = ClassParams::new(c.cfg.mu.unwrap_or(p.mu), c.l())?;
            if name == "chebyshev" {
                let t = chebyshev(&cp, f, x0, n)?;
                let ok = cp.mu <= p.mu && cp.l >= p.l && f.as_quadratic().is_some();
                let bound = ok.then(|| Bound { value: chebyshev_bound(&cp, n) * c.r0_sq.sqrt(), quantity: Quantity::Dist });
                Ok(plain(t, bound))
            } else {
                Ok(plain(heavy_ball(&cp, f, x0, n)?, None))
            }
        }
        "cg" => {
            c.smooth_only()?;
            Ok(plain(conjugate_gradient_quadratic(f, x0, n)?, None))
        }
        "fgm" => {
            c.smooth_only()?;
            let mu = c.mu();
            let t = fgm(f, x0, n, parse_form(c.cfg.form.as_deref())?, mu)?;
            Ok(plain(t, Bound::gap(fgm_bound(p.l, mu, c.r0_sq, n))))
        }
        "ogm" => {
            c.smooth_only()?;
            let t = ogm(f, x0, n, parse_form(c.cfg.form.as_deref())?)?;
            let bound = if n > 0 { Bound::gap(ogm_bound(p.l, c.r0_sq, n)?) } else { None };
            Ok(plain(t, bound))
        }
        "const_momentum" => {
            c.smooth_only()?;
            let t = constant_momentum(f, x0, n, parse_form(c.cfg.form.as_deref())?)?;
            Ok(plain(t, Bound::gap(const_momentum_bound(c.f0_gap, p.mu, p.l, c.r0_sq, n))))
        }
        "item" => {
            c.smooth_only()?;
            let t = item(f, x0, n)?;
            let d = item_bound(c.r0_sq, p.q(), n).sqrt();
            Ok(plain(t, Some(Bound { value: d, quantity: Quantity::Dist })))
        }
        "tmm" => {
            c.smooth_only()?;
            Ok(plain(tmm(f, x0, n)?, None))
        }
        "fista" | "prox_agm" => {
            let mu = c.mu();
            let l0 = c.backtracking_l0(mu);
            let mode = parse_backtrack(c.cfg.mode.as_deref())?;
            let run = if name == "fista" { fista } else { prox_agm };
            let t = run(c.problem, mu, l0, ALPHA, n, mode, x0)?;
            Ok(plain(t, Bound::gap(fista_bound(mu, ell(ALPHA, p.l, l0), c.r0_sq, n))))
        }
        "bregman_agm" => {
            let dgf = parse_dgf(c.cfg.mode.as_deref())?;
            let t = bregman_agm(c.problem, dgf, x0, n)?;
            Ok(plain(t, bregman_guarantee(c, dgf)))
        }
        "ppa" => {
            c.smooth_only()?;
            let steps = parse_steps(c.cfg.mode.as_deref(), c.lambda())?;
            let t = ppa(f, &steps, x0, n)?;
            Ok(plain(t, Bound::gap(ppa_bound(c.r0_sq, &steps, p.mu, n))))
        }
        "accel_ppa" => {
            c.smooth_only()?;
            let steps = parse_steps(c.cfg.mode.as_deref(), c.lambda())?;
            let mu = c.mu();
            let t = match c.cfg.delta {
                None => accel_inexact_ppa(f, &mut ExactProxSolver, &steps, 0.0, x0, n, mu)?,
                Some(delta) => {
                    let mut solver = GdSubproblemSolver { max_iters: 100_000 };
                    accel_inexact_ppa(f, &mut solver, &steps, delta, x0, n, mu)?
                }
            };
            Ok(plain(t, Bound::gap(accel_ppa_bound(c.r0_sq, &steps, mu, n))))
        }
        "catalyst" => {
            c.smooth_only()?;
            let inner = match c.cfg.mode.as_deref().unwrap_or("gd") {
                "gd" => InnerKind::Gd,
                "linesearch" => InnerKind::GdLineSearch,
                "momentum" => InnerKind::ConstMomentum,
                other => return Err(bad(format!("unknown catalyst inner method {other:?} (gd, linesearch, momentum)"))),
            };
            let mode = if c.mu() > 0.0 { CatalystMode::StronglyConvex } else { CatalystMode::Convex };
            let lambda = c.lambda();
            let run = catalyst(f, inner, lambda, n as u64, mode, x0)?;
            let k = run.counters.n_outer;
            let bound = if k > 0 { Bound::gap(catalyst_bound(c.r0_sq, lambda, k)) } else { None };
            let cn = &run.counters;
            let extra = vec![
                ("n_outer".to_string(), cn.n_outer as f64),
                ("n_useless".to_string(), cn.n_useless as f64),
                ("n_total".to_string(), cn.n_total as f64),
                ("n_inner_sum".to_string(), cn.n_inner.iter().sum::<u64>() as f64),
                ("burden".to_string(), cn.burden),
            ];
            Ok(Outcome { trace: run.trace, bound, extra })
        }
        "restart" => {
            c.smooth_only()?;
            restart(c)
        }
        "rna" => {
            c.smooth_only()?;
            let safeguard = match c.cfg.mode.as_deref().unwrap_or("linesearch") {
                "none" => Safeguard::None,
                "descent" => Safeguard::Descent,
                "linesearch" => Safeguard::LineSearch,
                other => return Err(bad(format!("unknown safeguard {other:?} (none, descent, linesearch)"))),
            };
            let lambda = c.cfg.lambda.unwrap_or(1e-8);
            Ok(plain(online_rna(f, x0, 1.0 / p.l, lambda, 5, n, safeguard)?, None))
        }
        other => Err(bad(format!("unknown method {other:?}"))),
    }
}

fn bregman_guarantee(c: &Ctx, dgf: Dgf) -> Option<Bound> {
    let xs = &c.problem.optimum.as_ref()?.x;
    let d0 = match dgf {
        Dgf::Euclidean => 0.5 * c.r0_sq,
        Dgf::Entropy => bregman_divergence(dgf, xs, c.x0),
    };
    Bound::gap(bregman_bound(c.p.l, d0, c.cfg.n))
}

fn monotone(c: &Ctx, inner: &str) -> Result<Outcome, RunError> {
    let (p, n) = (c.p, c.cfg.n);
    let mu = c.mu();
    let (method, bound) = match inner {
        "fgm" => {
            let m = Method::Fgm { form: parse_form(c.cfg.form.as_deref())?, mu, l: p.l };
            (m, Bound::gap(fgm_bound(p.l, mu, c.r0_sq, n)))
        }
        "const_momentum" => {
            let m = Method::ConstMomentum { form: parse_form(c.cfg.form.as_deref())?, mu: p.mu, l: p.l };
            (m, Bound::gap(const_momentum_bound(c.f0_gap, p.mu, p.l, c.r0_sq, n)))
        }
        "fista" | "prox_agm" => {
            let mode = parse_backtrack(c.cfg.mode.as_deref())?;
            let l0 = c.backtracking_l0(mu);
            let m = if inner == "fista" {
                Method::Fista { mode, mu, l0, alpha: ALPHA }
            } else {
                Method::ProxAgm { mode, mu, l0, alpha: ALPHA }
            };
            (m, Bound::gap(fista_bound(mu, ell(ALPHA, p.l, l0), c.r0_sq, n)))
        }
        "bregman_agm" => {
            let dgf = parse_dgf(c.cfg.mode.as_deref())?;
            (Method::Bregman { dgf, l: p.l }, bregman_guarantee(c, dgf))
        }
        other => return Err(bad(format!("monotone wrapper does not accept {other:?}"))),
    };
    Ok(plain(monotone_wrap(&method, c.problem, c.x0, n)?, bound))
}

fn restart(c: &Ctx) -> Result<Outcome, RunError> {
    let f = c.problem.f.as_ref();
    let (p, n) = (c.p, c.cfg.n);
    let mode = c.cfg.mode.as_deref().unwrap_or("scheduled");
    let heb = || -> Result<HebParams, RunError> {
        let h = f.heb().ok_or_else(|| bad(format!("{} reports no error-bound parameters", f.name())))?;
        Ok(HebParams::new(h.r, h.mu, p.l)?)
    };
    let (head, arg) = mode.split_once(':').map_or((mode, None), |(h, a)| (h, Some(a)));
    match head {
        "fixed" => {
            let k = match arg {
                Some(a) => a.parse().map_err(|_| bad(format!("bad epoch length {a:?}")))?,
                None => halving_epoch(p.mu, p.l)?,
            };
            if k == 0 {
                return Err(bad("epoch length must be positive"));
            }
            let epochs = n / k;
            let t = fixed_restart(f, RestartInner::Gd, k, c.x0, epochs)?;
            // each epoch of at least ⌈8L/μ⌉ gd steps halves the gap
            let halves = p.mu > 0.0 && k >= halving_epoch(p.mu, p.l)?;
            let bound = if halves { Bound::gap(0.5f64.powi(epochs as i32) * c.f0_gap) } else { None };
            Ok(plain(t, bound))
        }
        "scheduled" => {
            let h = heb()?;
            let t = scheduled_restart(&h, f, c.x0, c.f0_gap, n)?;
            Ok(plain(t, Bound::gap(scheduled_bound(&h, c.f0_gap, n as f64))))
        }
        "grid" => {
            let g = grid_restart(f, c.x0, n)?;
            let bound = heb().ok().map(|h| adaptive_bound(&h, c.f0_gap, n as f64)).and_then(Bound::gap);
            let extra = vec![("grid_p".to_string(), g.p as f64), ("grid_q".to_string(), g.q as f64)];
            Ok(Outcome { trace: g.best, bound, extra })
        }
        _ => Err(bad(format!("unknown restart mode {mode:?} (fixed[:k], scheduled, grid)"))),
    }
}
