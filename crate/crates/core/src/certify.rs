//! Executable certificates: pairwise interpolation conditions, the
//! equivalent characterizations of `F_{μ,L}`, per-step potential decrease
//! along a trace, and the 2×2 matrix inequality certifying distance
//! contraction of gradient descent.
//!
//! Every check produces [`Margin`]s: `slack ≥ 0` means the inequality holds,
//! and the global [`Tolerance`] decides how negative a slack may be given the
//! magnitude (`scale`) of the terms that produced it.

use std::fmt;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error};
use crate::momentum::bregman_divergence;
use crate::oracles::{CompositeProblem, Objective, Vector};
use crate::tol::Tolerance;
use crate::trace::{BacktrackMode, Dgf, Method, Record, Trace};

#[derive(Clone, Debug, PartialEq)]
pub struct Triplet {
    pub x: Vector,
    pub g: Vector,
    pub f: f64,
}

impl Triplet {
    pub fn at(f: &dyn Objective, x: &Vector) -> Self {
        Triplet { x: x.clone(), g: f.gradient(x), f: f.value(x) }
    }
}

/// The seven characterizations of `F_{μ,L}` (two-sided when `μ > 0`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassIneq {
    /// Lipschitz (and inverse Lipschitz) gradient
    I,
    /// quadratic upper (and lower) bounds
    II,
    /// `f(x) ≥ f(y) + ⟨∇f(y), x−y⟩ + ‖∇f(x)−∇f(y)‖²/(2L)`
    III,
    /// cocoercivity
    IV,
    /// `μ‖x−y‖² ≤ ⟨∇f(x)−∇f(y), x−y⟩ ≤ L‖x−y‖²`
    V,
    /// convexity of `L/2‖·‖² − f` and of `f − μ/2‖·‖²`, tested on a λ grid
    VI,
    /// `λf(x) + (1−λ)f(y) − λ(1−λ)L/2‖x−y‖² ≤ f(λx + (1−λ)y)`, plus the
    /// matching upper bound with `μ`
    VII,
}

impl ClassIneq {
    pub const ALL: [ClassIneq; 7] =
        [ClassIneq::I, ClassIneq::II, ClassIneq::III, ClassIneq::IV, ClassIneq::V, ClassIneq::VI, ClassIneq::VII];

    pub fn parse(s: &str) -> Result<Self, Error> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "i" => ClassIneq::I,
            "ii" => ClassIneq::II,
            "iii" => ClassIneq::III,
            "iv" => ClassIneq::IV,
            "v" => ClassIneq::V,
            "vi" => ClassIneq::VI,
            "vii" => ClassIneq::VII,
            other => return Err(invalid(format!("unknown inequality {other:?}"))),
        })
    }
}

impl fmt::Display for ClassIneq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ClassIneq::I => "i",
            ClassIneq::II => "ii",
            ClassIneq::III => "iii",
            ClassIneq::IV => "iv",
            ClassIneq::V => "v",
            ClassIneq::VI => "vi",
            ClassIneq::VII => "vii",
        };
        f.write_str(s)
    }
}

/// Where a margin was measured.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Site {
    /// ordered triplet pair `(i, j)`
    Pair(usize, usize),
    /// potential transition from record `k` to `k + 1`
    Step(usize),
    /// sampled pair `index` for one inequality; `lambda` for (vi)/(vii)
    Sample { ineq: ClassIneq, index: usize, lambda: Option<f64> },
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Site::Pair(i, j) => write!(f, "pair({i};{j})"),
            Site::Step(k) => write!(f, "step({k})"),
            Site::Sample { ineq, index, lambda: None } => write!(f, "{ineq}[{index}]"),
            Site::Sample { ineq, index, lambda: Some(l) } => write!(f, "{ineq}[{index}]@{l}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Margin {
    pub site: Site,
    pub slack: f64,
    /// magnitude of the terms entering the inequality
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarginReport {
    pub margins: Vec<Margin>,
    pub tol: Tolerance,
}

impl MarginReport {
    pub fn new(margins: Vec<Margin>, tol: Tolerance) -> Self {
        MarginReport { margins, tol }
    }

    /// `+∞` when there is nothing to check.
    pub fn min_slack(&self) -> f64 {
        self.margins.iter().map(|m| m.slack).fold(f64::INFINITY, f64::min)
    }

    /// Smallest `slack / max(1, scale)`.
    pub fn min_scaled_slack(&self) -> f64 {
        self.margins.iter().map(|m| m.slack / m.scale.max(1.0)).fold(f64::INFINITY, f64::min)
    }

    pub fn worst(&self) -> Option<&Margin> {
        self.margins.iter().min_by(|a, b| a.slack.total_cmp(&b.slack))
    }

    pub fn failures(&self) -> Vec<&Margin> {
        self.margins.iter().filter(|m| !self.tol.holds(m.slack, m.scale)).collect()
    }

    pub fn passed(&self) -> bool {
        self.margins.iter().all(|m| self.tol.holds(m.slack, m.scale))
    }

    /// `site,slack,scale` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "site,slack,scale")?;
        for m in &self.margins {
            writeln!(w, "{},{:e},{:e}", m.site, m.slack, m.scale)?;
        }
        Ok(())
    }
}

fn check_class(mu: f64, l: f64) -> Result<(), Error> {
    if !(l > 0.0 && l.is_finite() && mu >= 0.0 && mu < l) {
        return Err(invalid(format!("need 0 <= mu < L, got mu={mu}, L={l}")));
    }
    Ok(())
}

// ----------------------------------------------------------- interpolation

/// Interpolation condition of `F_{μ,L}` for every ordered pair `i ≠ j`:
/// `f_i ≥ f_j + ⟨g_j, x_i−x_j⟩ + ‖g_i−g_j‖²/(2L) + μ/(2(1−μ/L)) ‖x_i−x_j−(g_i−g_j)/L‖²`.
pub fn check_interpolation(triplets: &[Triplet], mu: f64, l: f64, tol: Tolerance) -> Result<MarginReport, Error> {
    check_class(mu, l)?;
    if let Some(t) = triplets.first() {
        let d = t.x.len();
        if triplets.iter().any(|t| t.x.len() != d || t.g.len() != d) {
            return Err(invalid("triplets must share one dimension"));
        }
    }
    let c = mu / (2.0 * (1.0 - mu / l));
    let mut margins = Vec::with_capacity(triplets.len() * triplets.len().saturating_sub(1));
    for (i, ti) in triplets.iter().enumerate() {
        for (j, tj) in triplets.iter().enumerate() {
            if i == j {
                continue;
            }
            let (mut lin, mut dg2, mut res2) = (0.0, 0.0, 0.0);
            for k in 0..ti.x.len() {
                let dx = ti.x[k] - tj.x[k];
                let dg = ti.g[k] - tj.g[k];
                lin += tj.g[k] * dx;
                dg2 += dg * dg;
                res2 += (dx - dg / l).powi(2);
            }
            let t1 = dg2 / (2.0 * l);
            let t2 = c * res2;
            let slack = ti.f - tj.f - lin - t1 - t2;
            let scale = ti.f.abs() + tj.f.abs() + lin.abs() + t1 + t2;
            margins.push(Margin { site: Site::Pair(i, j), slack, scale });
        }
    }
    Ok(MarginReport::new(margins, tol))
}

/// Triplets at every reported point of a trace and at the auxiliary
/// sequences stored in its state.
pub fn harvest_triplets(trace: &Trace, f: &dyn Objective) -> Vec<Triplet> {
    let mut out = Vec::new();
    for r in &trace.records {
        out.push(Triplet::at(f, &r.point));
        for v in [&r.state.x, &r.state.y, &r.state.z].into_iter().flatten() {
            out.push(Triplet::at(f, v));
        }
    }
    out
}

// ------------------------------------------------------ class inequalities

/// Pair sampling for [`check_class_inequalities`]: both points are drawn as
/// `center + r u` with `u` uniform on the sphere and `r` log-uniform in
/// `[1e-3 radius, radius]`; the center is the known minimizer (or 0).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sampling {
    pub samples: usize,
    pub radius: f64,
    pub seed: u64,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling { samples: 200, radius: 1.0, seed: 0 }
    }
}

/// λ values for the Jensen-type inequalities.
pub const LAMBDA_GRID: [f64; 11] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

fn sample_point(center: &Vector, radius: f64, rng: &mut ChaCha8Rng) -> Vector {
    let d = center.len();
    let mut u = Vector::from_fn(d, |_, _| StandardNormal.sample(rng));
    let n = u.norm();
    if n > 0.0 {
        u /= n;
    }
    let r = radius * 10f64.powf(-3.0 * rng.random::<f64>());
    center + u * r
}

pub fn check_class_inequalities(
    f: &dyn Objective,
    mu: f64,
    l: f64,
    which: &[ClassIneq],
    sampling: Sampling,
    tol: Tolerance,
) -> Result<MarginReport, Error> {
    check_class(mu, l)?;
    if !(sampling.radius > 0.0 && sampling.radius.is_finite()) {
        return Err(invalid("sampling radius must be positive"));
    }
    if !f.full_domain() {
        if let Some(w) = which.iter().find(|w| matches!(w, ClassIneq::III | ClassIneq::IV)) {
            return Err(Error::Unsupported(format!(
                "inequality ({w}) needs dom f = R^d, which {} does not have",
                f.name()
            )));
        }
    }
    let center = f.optimum().map_or_else(|| Vector::zeros(f.dim()), |o| o.x);
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let mut margins = Vec::new();
    for index in 0..sampling.samples {
        let x = sample_point(&center, sampling.radius, &mut rng);
        let y = sample_point(&center, sampling.radius, &mut rng);
        let (fx, fy) = (f.value(&x), f.value(&y));
        let (gx, gy) = (f.gradient(&x), f.gradient(&y));
        let dx = &x - &y;
        let dg = &gx - &gy;
        let (nx, ng) = (dx.norm(), dg.norm());
        let (nx2, ng2) = (nx * nx, ng * ng);
        let inner = dg.dot(&dx);
        let lin = gy.dot(&dx);
        for &ineq in which {
            let mut put = |slack: f64, scale: f64, lambda: Option<f64>| {
                margins.push(Margin { site: Site::Sample { ineq, index, lambda }, slack, scale });
            };
            let two_sided = mu > 0.0;
            match ineq {
                ClassIneq::I => {
                    put(l * nx - ng, l * nx + ng, None);
                    if two_sided {
                        put(ng - mu * nx, ng + mu * nx, None);
                    }
                }
                ClassIneq::II => {
                    let base = fx.abs() + fy.abs() + lin.abs();
                    put(fy + lin + 0.5 * l * nx2 - fx, base + 0.5 * l * nx2, None);
                    put(fx - fy - lin - 0.5 * mu * nx2, base + 0.5 * mu * nx2, None);
                }
                ClassIneq::III => {
                    let base = fx.abs() + fy.abs() + lin.abs();
                    put(fx - fy - lin - ng2 / (2.0 * l), base + ng2 / (2.0 * l), None);
                    if two_sided {
                        put(fy + lin + ng2 / (2.0 * mu) - fx, base + ng2 / (2.0 * mu), None);
                    }
                }
                ClassIneq::IV => {
                    put(inner - ng2 / l, inner.abs() + ng2 / l, None);
                    if two_sided {
                        put(ng2 / mu - inner, inner.abs() + ng2 / mu, None);
                    }
                }
                ClassIneq::V => {
                    put(l * nx2 - inner, l * nx2 + inner.abs(), None);
                    put(inner - mu * nx2, mu * nx2 + inner.abs(), None);
                }
                ClassIneq::VI => {
                    for &lam in &LAMBDA_GRID {
                        let m = &x * lam + &y * (1.0 - lam);
                        let fm = f.value(&m);
                        let (sx, sy, sm) = (x.norm_squared(), y.norm_squared(), m.norm_squared());
                        for (c, sign) in [(l, -1.0), (mu, 1.0)] {
                            // h = sign (f − c/2 ‖·‖²)
                            let h = |fv: f64, sq: f64| sign * (fv - 0.5 * c * sq);
                            let slack = lam * h(fx, sx) + (1.0 - lam) * h(fy, sy) - h(fm, sm);
                            let scale = fx.abs() + fy.abs() + fm.abs() + 0.5 * c * (sx + sy + sm);
                            put(slack, scale, Some(lam));
                        }
                    }
                }
                ClassIneq::VII => {
                    for &lam in &LAMBDA_GRID {
                        let m = &x * lam + &y * (1.0 - lam);
                        let fm = f.value(&m);
                        let chord = lam * fx + (1.0 - lam) * fy;
                        let w = lam * (1.0 - lam) * 0.5 * nx2;
                        let scale = fx.abs() + fy.abs() + fm.abs() + l * w;
                        put(fm - (chord - l * w), scale, Some(lam));
                        put(chord - mu * w - fm, scale, Some(lam));
                    }
                }
            }
        }
    }
    Ok(MarginReport::new(margins, tol))
}

// -------------------------------------------------------------- potentials

/// A potential value together with the magnitude of its terms.
#[derive(Clone, Copy, Debug)]
struct Pot {
    v: f64,
    mag: f64,
}

struct Ctx<'a> {
    p: &'a CompositeProblem,
    xs: Vector,
    fs: f64,
}

impl Ctx<'_> {
    fn gap(&self, r: &Record) -> (f64, f64) {
        (r.value - self.fs, r.value.abs() + self.fs.abs())
    }
    fn dist2(&self, v: &Vector) -> f64 {
        (v - &self.xs).norm_squared()
    }

    /// `A (F(x) − F⋆) + c/2 ‖v − x⋆‖²`
    fn a_form(&self, r: &Record, a: f64, c: f64, v: &Vector) -> Pot {
        let (g, gm) = self.gap(r);
        let d = 0.5 * c * self.dist2(v);
        Pot { v: a * g + d, mag: a.abs() * gm + d.abs() }
    }

    /// `f(y) − f⋆ − ‖∇f(y)‖²/(2L) − μ/(2(1−q)) ‖y − ∇f(y)/L − x⋆‖²`
    fn lower_gap(&self, y: &Vector, mu: f64, l: f64) -> Pot {
        let f = &self.p.f;
        let fy = f.value(y);
        let g = f.gradient(y);
        let t1 = g.norm_squared() / (2.0 * l);
        let t2 = if mu > 0.0 { mu / (2.0 * (1.0 - mu / l)) * (y - &g / l - &self.xs).norm_squared() } else { 0.0 };
        Pot { v: fy - self.fs - t1 - t2, mag: fy.abs() + self.fs.abs() + t1 + t2 }
    }
}

fn need<'a, T>(v: &'a Option<T>, what: &str, k: usize) -> Result<&'a T, Error> {
    v.as_ref().ok_or_else(|| invalid(format!("record {k} lacks {what}; trace does not match its method descriptor")))
}

/// One potential transition: `rhs − lhs ≥ 0` is the certified inequality.
struct Transition {
    lhs: Pot,
    rhs: Pot,
}

struct Series {
    values: Vec<f64>,
    steps: Vec<Transition>,
}

fn decreasing(pots: Vec<Pot>) -> Series {
    contracting(pots, |_| 1.0)
}

fn contracting(pots: Vec<Pot>, rate: impl Fn(usize) -> f64) -> Series {
    let steps = pots
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            let r = rate(k);
            Transition { lhs: w[1], rhs: Pot { v: r * w[0].v, mag: r * w[0].mag } }
        })
        .collect();
    Series { values: pots.iter().map(|p| p.v).collect(), steps }
}

/// Method-specific series. `method` is passed separately so that the monotone
/// wrapper can reuse the inner certificate on the best-point values.
fn series(method: &Method, trace: &Trace, cx: &Ctx) -> Result<Series, Error> {
    let recs = &trace.records;
    let unsupported = |name: String| Err(Error::Unsupported(format!("no potential certificate is registered for {name}")));
    match method {
        Method::Gd { gamma, mu, .. } => {
            // the step plays the role of 1/L in the potential
            let lt = 1.0 / gamma;
            let q = if mu * gamma < 1.0 { mu * gamma } else { 0.0 };
            let mu = q * lt;
            let mut a = 0.0;
            let mut pots = Vec::with_capacity(recs.len());
            for (k, r) in recs.iter().enumerate() {
                if k > 0 {
                    a = (1.0 + a) / (1.0 - q);
                }
                pots.push(cx.a_form(r, a, lt + mu * a, &r.point));
            }
            Ok(decreasing(pots))
        }
        Method::Fgm { mu, l, .. } => {
            let pots = recs
                .iter()
                .map(|r| {
                    let a = *need(&r.state.acc, "A_k", r.k)?;
                    Ok(cx.a_form(r, a, l + mu * a, need(&r.state.z, "z_k", r.k)?))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            Ok(decreasing(pots))
        }
        Method::ConstMomentum { mu, l, .. } => {
            let pots = recs
                .iter()
                .map(|r| Ok(cx.a_form(r, 1.0, *mu, need(&r.state.z, "z_k", r.k)?)))
                .collect::<Result<Vec<_>, Error>>()?;
            let rho = 1.0 - (mu / l).sqrt();
            Ok(contracting(pots, |_| rho))
        }
        Method::Ogm { n, l, .. } => ogm_series(*n, *l, recs, cx),
        Method::Item { mu, l } => {
            let q = mu / l;
            let mut pots = Vec::with_capacity(recs.len());
            for (k, r) in recs.iter().enumerate() {
                let a = *need(&r.state.acc, "A_k", k)?;
                let z = need(&r.state.z, "z_k", k)?;
                let d = (l + mu * a) / (1.0 - q) * cx.dist2(z);
                let head = if k == 0 {
                    Pot { v: 0.0, mag: 0.0 }
                } else {
                    let lg = cx.lower_gap(need(&r.state.y, "y_{k-1}", k)?, *mu, *l);
                    Pot { v: a * lg.v, mag: a * lg.mag }
                };
                pots.push(Pot { v: head.v + d, mag: head.mag + d });
            }
            Ok(decreasing(pots))
        }
        Method::Tmm { mu, l } => {
            let q = mu / l;
            let mut pots = Vec::with_capacity(recs.len());
            for (k, r) in recs.iter().enumerate() {
                let lg = cx.lower_gap(need(&r.state.y, "y_{k-1}", k)?, *mu, *l);
                let d = mu / (1.0 - q) * cx.dist2(need(&r.state.z, "z_k", k)?);
                pots.push(Pot { v: lg.v + d, mag: lg.mag + d });
            }
            let rho = 1.0 - q.sqrt();
            Ok(contracting(pots, |_| rho * rho))
        }
        Method::Fista { mode, mu, .. } | Method::ProxAgm { mode, mu, .. } => backtracking_series(*mode, *mu, recs, cx),
        Method::Bregman { dgf, l } => {
            let pots = recs
                .iter()
                .map(|r| {
                    let a = *need(&r.state.acc, "A_k", r.k)?;
                    let z = need(&r.state.z, "z_k", r.k)?;
                    let d = l * bregman_divergence(*dgf, &cx.xs, z);
                    if *dgf == Dgf::Entropy && !d.is_finite() {
                        return Err(invalid("entropy divergence is infinite: z_k left the relative interior"));
                    }
                    let (g, gm) = cx.gap(r);
                    Ok(Pot { v: a * g + d, mag: a * gm + d.abs() })
                })
                .collect::<Result<Vec<_>, Error>>()?;
            Ok(decreasing(pots))
        }
        Method::Monotone(inner) => match inner.as_ref() {
            Method::Monotone(_) => Err(invalid("nested monotone wrappers are not supported")),
            m => series(m, trace, cx),
        },
        Method::Ppa { mu } => {
            let pots = recs
                .iter()
                .map(|r| {
                    let a = *need(&r.state.acc, "A_k", r.k)?;
                    Ok(cx.a_form(r, a, 1.0 + mu * a, &r.point))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            Ok(decreasing(pots))
        }
        Method::AccPpa { mu, .. } | Method::Catalyst { mu, .. } => {
            let pots = recs
                .iter()
                .map(|r| {
                    let a = *need(&r.state.acc, "A_k", r.k)?;
                    Ok(cx.a_form(r, a, 1.0 + mu * a, need(&r.state.z, "z_k", r.k)?))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            Ok(decreasing(pots))
        }
        Method::Chebyshev { .. }
        | Method::HeavyBall { .. }
        | Method::ConjugateGradient
        | Method::Restart
        | Method::Extrapolation => unsupported(method.name()),
    }
}

fn ogm_series(n: usize, l: f64, recs: &[Record], cx: &Ctx) -> Result<Series, Error> {
    if recs.len() != n + 1 {
        return Err(invalid(format!("an OGM trace with budget {n} must have {} records, found {}", n + 1, recs.len())));
    }
    let mut pots = Vec::with_capacity(n + 2);
    for (m, r) in recs.iter().enumerate() {
        let d = 0.5 * l * cx.dist2(need(&r.state.z, "z_k", m)?);
        let head = if m == 0 {
            Pot { v: 0.0, mag: 0.0 }
        } else {
            let prev = &recs[m - 1];
            let th = *need(&prev.state.theta, "theta_k", m - 1)?;
            let lg = cx.lower_gap(need(&prev.state.y, "y_k", m - 1)?, 0.0, l);
            Pot { v: 2.0 * th * th * lg.v, mag: 2.0 * th * th * lg.mag }
        };
        pots.push(Pot { v: head.v + d, mag: head.mag + d });
    }
    let mut s = decreasing(pots);
    if n > 0 {
        // last step uses the modified potential at y_N
        let r = &recs[n];
        let th = *need(&r.state.theta, "theta_N", n)?;
        let y = need(&r.state.y, "y_N", n)?;
        let z = need(&r.state.z, "z_N", n)?;
        let g = cx.p.f.gradient(y);
        let fy = cx.p.f.value(y);
        let d = 0.5 * l * (z - &g * (th / l) - &cx.xs).norm_squared();
        let fin = Pot { v: th * th * (fy - cx.fs) + d, mag: th * th * (fy.abs() + cx.fs.abs()) + d };
        let prev = *s.steps.last().map(|t| &t.lhs).expect("n > 0");
        s.steps.push(Transition { lhs: fin, rhs: prev });
    }
    Ok(s)
}

fn backtracking_series(mode: BacktrackMode, mu: f64, recs: &[Record], cx: &Ctx) -> Result<Series, Error> {
    if mode != BacktrackMode::Monotone {
        let pots = recs
            .iter()
            .map(|r| {
                let b = *need(&r.state.bacc, "B_k", r.k)?;
                Ok(cx.a_form(r, b, 1.0 + mu * b, need(&r.state.z, "z_k", r.k)?))
            })
            .collect::<Result<Vec<_>, Error>>()?;
        return Ok(decreasing(pots));
    }
    // both sides of step k use the estimate L_{k+1} accepted at that step
    let pot = |r: &Record, l: f64| -> Result<Pot, Error> {
        let a = *need(&r.state.acc, "A_k", r.k)?;
        Ok(cx.a_form(r, a, l + mu * a, need(&r.state.z, "z_k", r.k)?))
    };
    let mut values = Vec::with_capacity(recs.len());
    let mut steps = Vec::with_capacity(recs.len().saturating_sub(1));
    for (k, r) in recs.iter().enumerate() {
        let lk = *need(&r.state.l_est, "L_k", k)?;
        values.push(pot(r, lk)?.v);
        if k > 0 {
            steps.push(Transition { lhs: pot(r, lk)?, rhs: pot(&recs[k - 1], lk)? });
        }
    }
    Ok(Series { values, steps })
}

fn context<'a>(trace: &Trace, p: &'a CompositeProblem) -> Result<Ctx<'a>, Error> {
    let o = p.optimum.as_ref().ok_or_else(|| invalid("potential checks need a known optimum"))?;
    if trace.records.is_empty() {
        return Err(invalid("empty trace"));
    }
    let d = p.dim();
    for (i, r) in trace.records.iter().enumerate() {
        if r.point.len() != d {
            return Err(invalid(format!("record {i} has dimension {}, problem has {d}", r.point.len())));
        }
        if r.k != trace.records[0].k + i {
            return Err(invalid(format!("record indices are not consecutive at position {i}")));
        }
    }
    Ok(Ctx { p, xs: o.x.clone(), fs: o.f })
}

/// Potential value at every record of `trace`, as it would be reported in the
/// `potential` column.
pub fn potential_values(trace: &Trace, problem: &CompositeProblem) -> Result<Vec<f64>, Error> {
    let cx = context(trace, problem)?;
    Ok(series(&trace.method, trace, &cx)?.values)
}

/// Fills `Record::potential` in place.
pub fn annotate_potential(trace: &mut Trace, problem: &CompositeProblem) -> Result<(), Error> {
    let v = potential_values(trace, problem)?;
    for (r, p) in trace.records.iter_mut().zip(v) {
        r.potential = Some(p);
    }
    Ok(())
}

/// Checks the potential inequality of the method that produced `trace` at
/// every step. Methods without a registered certificate give `Unsupported`.
pub fn check_potential(trace: &Trace, problem: &CompositeProblem, tol: Tolerance) -> Result<MarginReport, Error> {
    let cx = context(trace, problem)?;
    let s = series(&trace.method, trace, &cx)?;
    let margins = s
        .steps
        .iter()
        .enumerate()
        .map(|(k, t)| Margin { site: Site::Step(k), slack: t.rhs.v - t.lhs.v, scale: t.rhs.mag + t.lhs.mag })
        .collect();
    Ok(MarginReport::new(margins, tol))
}

/// Whether `check_potential` knows a certificate for `method`.
pub fn has_certificate(method: &Method) -> bool {
    match method {
        Method::Chebyshev { .. }
        | Method::HeavyBall { .. }
        | Method::ConjugateGradient
        | Method::Restart
        | Method::Extrapolation => false,
        Method::Monotone(m) => has_certificate(m),
        _ => true,
    }
}

// --------------------------------------------------------------------- LMI

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LmiOutcome {
    /// `M(lambda) ⪰ 0` up to tolerance
    Feasible { lambda: f64, min_eig: f64 },
    /// best multiplier found and its (negative) smallest eigenvalue
    Infeasible { lambda: f64, min_eig: f64 },
}

impl LmiOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, LmiOutcome::Feasible { .. })
    }
}

/// Entries `(m11, m12, m22)` of the multiplier matrix certifying
/// `‖x_{k+1} − x⋆‖² ≤ τ ‖x_k − x⋆‖²` for `x_{k+1} = x_k − γ∇f(x_k)`.
pub fn lmi_gd_matrix(tau: f64, gamma: f64, mu: f64, l: f64, lambda: f64) -> (f64, f64, f64) {
    let c = l - mu;
    (tau - 1.0 + mu * l * lambda / c, gamma - (l + mu) * lambda / (2.0 * c), -gamma * gamma + lambda / c)
}

fn min_eig_2x2((a, b, c): (f64, f64, f64)) -> f64 {
    let m = 0.5 * (a + c);
    let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    m - r
}

/// Searches for `λ ≥ 0` making the 2×2 matrix positive semidefinite: a scan
/// over `λ = 0` and `grid` log-spaced values in `[1e-8, 1e4]/L`, then
/// golden-section refinement of the smallest eigenvalue (concave in `λ`)
/// around the best grid point.
pub fn lmi_gd_distance(tau: f64, gamma: f64, mu: f64, l: f64, grid: usize, tol: Tolerance) -> Result<LmiOutcome, Error> {
    check_class(mu, l)?;
    if !(tau.is_finite() && gamma.is_finite()) {
        return Err(invalid("tau and gamma must be finite"));
    }
    let grid = grid.max(2);
    let eig = |lam: f64| min_eig_2x2(lmi_gd_matrix(tau, gamma, mu, l, lam));
    let mut cand: Vec<f64> = vec![0.0];
    cand.extend((0..grid).map(|i| 10f64.powf(-8.0 + 12.0 * i as f64 / (grid - 1) as f64) / l));
    let (ib, _) = cand
        .iter()
        .enumerate()
        .map(|(i, &lam)| (i, eig(lam)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty grid");
    let lo = cand[ib.saturating_sub(1)];
    let hi = cand[(ib + 1).min(cand.len() - 1)];
    let refined = crate::prox_outer::golden_section(|lam| -eig(lam), lo, hi, 200);
    let (lambda, min_eig) = [cand[ib], refined]
        .into_iter()
        .map(|lam| (lam, eig(lam)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("two candidates");
    let (a, b, c) = lmi_gd_matrix(tau, gamma, mu, l, lambda);
    let scale = a.abs() + b.abs() + c.abs() + 1.0;
    Ok(if tol.holds(min_eig, scale) {
        LmiOutcome::Feasible { lambda, min_eig }
    } else {
        LmiOutcome::Infeasible { lambda, min_eig }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lmi_stationary_map() {
        let t = Tolerance::default();
        assert!(lmi_gd_distance(1.0, 0.0, 0.1, 1.0, 200, t).unwrap().is_feasible());
        assert!(!lmi_gd_distance(0.99, 0.0, 0.1, 1.0, 200, t).unwrap().is_feasible());
    }

    #[test]
    fn lmi_tangent_instance() {
        // at λ = 1.8 the matrix is [[0.01, -0.1], [-0.1, 1]], singular PSD
        let (a, b, c) = lmi_gd_matrix(0.81, 1.0, 0.1, 1.0, 1.8);
        assert!((a - 0.01).abs() < 1e-15 && (b + 0.1).abs() < 1e-15 && (c - 1.0).abs() < 1e-15);
        assert!(min_eig_2x2((a, b, c)).abs() < 1e-15);
        let out = lmi_gd_distance(0.81, 1.0, 0.1, 1.0, 400, Tolerance::default()).unwrap();
        let LmiOutcome::Feasible { lambda, .. } = out else { panic!("{out:?}") };
        assert!((lambda - 1.8).abs() < 1e-3);
    }

    #[test]
    fn interpolation_single_and_planted() {
        let t = Triplet { x: Vector::zeros(2), g: Vector::zeros(2), f: 0.0 };
        let r = check_interpolation(std::slice::from_ref(&t), 0.0, 1.0, Tolerance::default()).unwrap();
        assert!(r.margins.is_empty() && r.passed());
        assert!(check_interpolation(&[], 1.0, 1.0, Tolerance::default()).is_err());
    }

    #[test]
    fn ineq_names_roundtrip() {
        for w in ClassIneq::ALL {
            assert_eq!(ClassIneq::parse(&w.to_string()).unwrap(), w);
        }
        assert!(ClassIneq::parse("viii").is_err());
    }
}
