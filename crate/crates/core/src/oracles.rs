//! Test-problem oracles, proximal maps and the composite problem bundle.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error};
use crate::linalg;
use crate::tol::Tolerance;

pub type Vector = DVector<f64>;

/// Smoothness / strong convexity descriptor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassParams {
    pub mu: f64,
    pub l: f64,
}

impl ClassParams {
    pub fn new(mu: f64, l: f64) -> Result<Self, Error> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(invalid(format!("L must be positive and finite, got {l}")));
        }
        if !(mu >= 0.0 && mu < l) {
            return Err(invalid(format!("need 0 <= mu < L, got mu={mu}, L={l}")));
        }
        Ok(ClassParams { mu, l })
    }

    /// Inverse condition number mu/L.
    pub fn q(&self) -> f64 {
        self.mu / self.l
    }

    /// L/mu, infinite when mu = 0.
    pub fn kappa(&self) -> f64 {
        if self.mu == 0.0 {
            f64::INFINITY
        } else {
            self.l / self.mu
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Optimum {
    pub x: Vector,
    pub f: f64,
}

/// Hölderian error bound parameters `(mu/r) d(x, X*)^r <= f(x) - f*`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Heb {
    pub r: f64,
    pub mu: f64,
}

/// A smooth convex function together with what is known about it.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;
    fn params(&self) -> ClassParams;
    fn name(&self) -> String;

    /// `prox_{step f}(x)` when available in closed form.
    fn prox(&self, _x: &Vector, _step: f64) -> Option<Vector> {
        None
    }
    fn optimum(&self) -> Option<Optimum> {
        None
    }
    fn heb(&self) -> Option<Heb> {
        None
    }
    /// Inequalities (iii) and (iv) of the smooth-class list need `dom f = R^d`.
    fn full_domain(&self) -> bool {
        true
    }
    fn as_quadratic(&self) -> Option<&Quadratic> {
        None
    }
}

impl fmt::Debug for dyn Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Objective({})", self.name())
    }
}

// ---------------------------------------------------------------- quadratic

/// `f(x) = ½ (x-x*)ᵀ H (x-x*) + f*` with `H = Q diag(eigs) Qᵀ`.
#[derive(Clone, Debug)]
pub struct Quadratic {
    eigs: Vec<f64>,
    rot: Option<DMatrix<f64>>,
    x_star: Vector,
    f_star: f64,
}

impl Quadratic {
    pub fn eigs(&self) -> &[f64] {
        &self.eigs
    }

    pub fn hessian(&self) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&Vector::from_vec(self.eigs.clone()));
        match &self.rot {
            Some(q) => q * d * q.transpose(),
            None => d,
        }
    }

    /// `H v`
    pub fn apply(&self, v: &Vector) -> Vector {
        match &self.rot {
            Some(q) => {
                let mut u = q.tr_mul(v);
                u.iter_mut().zip(&self.eigs).for_each(|(ui, h)| *ui *= h);
                q * u
            }
            None => v.component_mul(&Vector::from_column_slice(&self.eigs)),
        }
    }

    fn to_eigbasis(&self, v: &Vector) -> Vector {
        match &self.rot {
            Some(q) => q.tr_mul(v),
            None => v.clone(),
        }
    }

    fn from_eigbasis(&self, v: Vector) -> Vector {
        match &self.rot {
            Some(q) => q * v,
            None => v,
        }
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.eigs.len()
    }
    fn value(&self, x: &Vector) -> f64 {
        let e = x - &self.x_star;
        0.5 * e.dot(&self.apply(&e)) + self.f_star
    }
    fn gradient(&self, x: &Vector) -> Vector {
        self.apply(&(x - &self.x_star))
    }
    fn params(&self) -> ClassParams {
        let mu = self.eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        let l = self.eigs.iter().cloned().fold(0.0, f64::max);
        // a flat spectrum has mu = L; nudge mu so that q < 1 still holds
        ClassParams { mu: if mu < l { mu } else { mu * (1.0 - 1e-12) }, l }
    }
    fn name(&self) -> String {
        format!("quadratic(d={})", self.eigs.len())
    }
    fn prox(&self, x: &Vector, step: f64) -> Option<Vector> {
        let mut u = self.to_eigbasis(&(x - &self.x_star));
        u.iter_mut().zip(&self.eigs).for_each(|(ui, h)| *ui /= 1.0 + step * h);
        Some(&self.x_star + self.from_eigbasis(u))
    }
    fn optimum(&self) -> Option<Optimum> {
        Some(Optimum { x: self.x_star.clone(), f: self.f_star })
    }
    fn heb(&self) -> Option<Heb> {
        let p = self.params();
        Some(Heb { r: 2.0, mu: p.mu })
    }
    fn as_quadratic(&self) -> Option<&Quadratic> {
        Some(self)
    }
}

/// Diagonal quadratic with the given spectrum and minimizer, `f* = 0`.
pub fn make_quadratic(eigs: &[f64], x_star: Vector) -> Result<Quadratic, Error> {
    make_quadratic_rotated(eigs, x_star, None)
}

/// As [`make_quadratic`], optionally mixed by a seeded random rotation so that
/// methods cannot exploit axis alignment.
pub fn make_quadratic_rotated(eigs: &[f64], x_star: Vector, rotation_seed: Option<u64>) -> Result<Quadratic, Error> {
    if eigs.is_empty() {
        return Err(invalid("eigenvalue list is empty"));
    }
    if eigs.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
        return Err(invalid("eigenvalues must be positive and finite"));
    }
    if x_star.len() != eigs.len() {
        return Err(invalid(format!("x_star has dimension {}, expected {}", x_star.len(), eigs.len())));
    }
    let rot = rotation_seed.map(|s| linalg::random_orthogonal(eigs.len(), &mut ChaCha8Rng::seed_from_u64(s)));
    Ok(Quadratic { eigs: eigs.to_vec(), rot, x_star, f_star: 0.0 })
}

/// Random quadratic: `d` eigenvalues spread log-uniformly over `[mu, L]`
/// (both endpoints included when `d >= 2`), random rotation and minimizer.
pub fn random_quadratic(d: usize, mu: f64, l: f64, seed: u64) -> Result<Quadratic, Error> {
    if d == 0 || !(mu > 0.0 && l >= mu) {
        return Err(invalid("need d >= 1 and 0 < mu <= L"));
    }
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eigs: Vec<f64> = (0..d)
        .map(|i| match i {
            0 => mu,
            1 => l,
            _ => (mu.ln() + rng.random::<f64>() * (l / mu).ln()).exp(),
        })
        .collect();
    let x_star = linalg::gaussian_vector(d, &mut rng);
    let rot = Some(linalg::random_orthogonal(d, &mut rng));
    Ok(Quadratic { eigs, rot, x_star, f_star: 0.0 })
}

// -------------------------------------------------------------------- huber

/// Coordinatewise Huber function with minimizer 0: `L x²/2` for `|x| < tau`,
/// `L tau |x| - L tau²/2` otherwise.
#[derive(Clone, Debug)]
pub struct Huber {
    tau: f64,
    l: f64,
    d: usize,
}

impl Huber {
    pub fn tau(&self) -> f64 {
        self.tau
    }
    fn phi(&self, t: f64) -> f64 {
        if t.abs() >= self.tau {
            self.l * self.tau * t.abs() - 0.5 * self.l * self.tau * self.tau
        } else {
            0.5 * self.l * t * t
        }
    }
    fn dphi(&self, t: f64) -> f64 {
        if t.abs() >= self.tau {
            self.l * self.tau * t.signum()
        } else {
            self.l * t
        }
    }
}

impl Objective for Huber {
    fn dim(&self) -> usize {
        self.d
    }
    fn value(&self, x: &Vector) -> f64 {
        x.iter().map(|&t| self.phi(t)).sum()
    }
    fn gradient(&self, x: &Vector) -> Vector {
        x.map(|t| self.dphi(t))
    }
    fn params(&self) -> ClassParams {
        ClassParams { mu: 0.0, l: self.l }
    }
    fn name(&self) -> String {
        format!("huber(d={},tau={})", self.d, self.tau)
    }
    fn prox(&self, x: &Vector, step: f64) -> Option<Vector> {
        let s = step * self.l;
        Some(x.map(|t| {
            if t.abs() <= self.tau * (1.0 + s) {
                t / (1.0 + s)
            } else {
                t - s * self.tau * t.signum()
            }
        }))
    }
    fn optimum(&self) -> Option<Optimum> {
        Some(Optimum { x: Vector::zeros(self.d), f: 0.0 })
    }
}

pub fn make_huber(tau: f64, l: f64, d: usize) -> Result<Huber, Error> {
    if !(tau > 0.0 && l > 0.0 && d > 0) {
        return Err(invalid("Huber needs tau > 0, L > 0, d >= 1"));
    }
    Ok(Huber { tau, l, d })
}

// ---------------------------------------------------------------- HEB power

/// `f(x) = ‖x‖^r / r`, sharp with `(r, mu=1)`. Its gradient is only locally
/// Lipschitz, so the reported `L` is the one valid on the ball of the given
/// radius around 0.
#[derive(Clone, Debug)]
pub struct HebPower {
    r: f64,
    d: usize,
    radius: f64,
}

impl HebPower {
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
}

impl Objective for HebPower {
    fn dim(&self) -> usize {
        self.d
    }
    fn value(&self, x: &Vector) -> f64 {
        x.norm().powf(self.r) / self.r
    }
    fn gradient(&self, x: &Vector) -> Vector {
        let n = x.norm();
        if n == 0.0 {
            return Vector::zeros(self.d);
        }
        x * n.powf(self.r - 2.0)
    }
    fn params(&self) -> ClassParams {
        if self.r == 2.0 {
            ClassParams { mu: 1.0 - 1e-12, l: 1.0 }
        } else {
            ClassParams { mu: 0.0, l: (self.r - 1.0) * self.radius.powf(self.r - 2.0) }
        }
    }
    fn name(&self) -> String {
        format!("heb_power(r={},d={})", self.r, self.d)
    }
    fn optimum(&self) -> Option<Optimum> {
        Some(Optimum { x: Vector::zeros(self.d), f: 0.0 })
    }
    fn heb(&self) -> Option<Heb> {
        Some(Heb { r: self.r, mu: 1.0 })
    }
}

pub fn make_heb_power(r: f64, d: usize, radius: f64) -> Result<HebPower, Error> {
    if !(r >= 2.0) || !r.is_finite() {
        return Err(invalid(format!("HEB exponent must satisfy r >= 2, got {r}")));
    }
    if d == 0 || !(radius > 0.0) {
        return Err(invalid("need d >= 1 and a positive ball radius"));
    }
    Ok(HebPower { r, d, radius })
}

// ------------------------------------------------------------------- linear

/// `f(x) = ⟨c, x⟩`; any `L > 0` is valid, `nominal_l` is reported.
#[derive(Clone, Debug)]
pub struct Linear {
    c: Vector,
    nominal_l: f64,
}

impl Objective for Linear {
    fn dim(&self) -> usize {
        self.c.len()
    }
    fn value(&self, x: &Vector) -> f64 {
        self.c.dot(x)
    }
    fn gradient(&self, _x: &Vector) -> Vector {
        self.c.clone()
    }
    fn params(&self) -> ClassParams {
        ClassParams { mu: 0.0, l: self.nominal_l }
    }
    fn name(&self) -> String {
        format!("linear(d={})", self.c.len())
    }
}

pub fn make_linear(c: Vector, nominal_l: f64) -> Result<Linear, Error> {
    if c.is_empty() || !(nominal_l > 0.0) {
        return Err(invalid("linear objective needs d >= 1 and nominal L > 0"));
    }
    Ok(Linear { c, nominal_l })
}

// ---------------------------------------------------------------- nonsmooth

/// Closed convex proper `h` with an exact proximal map.
pub trait Nonsmooth: Send + Sync {
    /// `+inf` outside the domain.
    fn value(&self, x: &Vector) -> f64;
    /// `prox_{step h}(x)`.
    fn prox(&self, x: &Vector, step: f64) -> Vector;
    fn name(&self) -> String;
    fn contains(&self, _x: &Vector, _tol: &Tolerance) -> bool {
        true
    }
    fn is_zero(&self) -> bool {
        false
    }
    fn has_restricted_domain(&self) -> bool {
        false
    }
    /// Tests `x - y ∈ step ∂h(y)`, i.e. that `y = prox_{step h}(x)`.
    fn prox_optimality(&self, x: &Vector, y: &Vector, step: f64, tol: &Tolerance) -> bool;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Zero;

impl Nonsmooth for Zero {
    fn value(&self, _x: &Vector) -> f64 {
        0.0
    }
    fn prox(&self, x: &Vector, _step: f64) -> Vector {
        x.clone()
    }
    fn name(&self) -> String {
        "zero".into()
    }
    fn is_zero(&self) -> bool {
        true
    }
    fn prox_optimality(&self, x: &Vector, y: &Vector, _step: f64, tol: &Tolerance) -> bool {
        (x - y).amax() <= tol.allowance(x.amax())
    }
}

/// `weight · ‖x‖₁`
#[derive(Clone, Copy, Debug)]
pub struct L1 {
    pub weight: f64,
}

impl Nonsmooth for L1 {
    fn value(&self, x: &Vector) -> f64 {
        self.weight * x.lp_norm(1)
    }
    fn prox(&self, x: &Vector, step: f64) -> Vector {
        prox_l1(x, step * self.weight)
    }
    fn name(&self) -> String {
        format!("l1({})", self.weight)
    }
    fn prox_optimality(&self, x: &Vector, y: &Vector, step: f64, tol: &Tolerance) -> bool {
        let w = step * self.weight;
        x.iter().zip(y.iter()).all(|(&xi, &yi)| {
            let v = xi - yi;
            let slack = tol.allowance(xi.abs().max(w));
            if yi != 0.0 {
                (v - w * yi.signum()).abs() <= slack
            } else {
                v.abs() <= w + slack
            }
        })
    }
}

/// Indicator of the probability simplex.
#[derive(Clone, Copy, Debug, Default)]
pub struct Simplex;

impl Nonsmooth for Simplex {
    fn value(&self, x: &Vector) -> f64 {
        if self.contains(x, &Tolerance::default()) {
            0.0
        } else {
            f64::INFINITY
        }
    }
    fn prox(&self, x: &Vector, _step: f64) -> Vector {
        project_simplex(x)
    }
    fn name(&self) -> String {
        "simplex".into()
    }
    fn contains(&self, x: &Vector, tol: &Tolerance) -> bool {
        let slack = tol.allowance(1.0) * x.len().max(1) as f64;
        x.iter().all(|&t| t >= -slack) && (x.sum() - 1.0).abs() <= slack
    }
    fn has_restricted_domain(&self) -> bool {
        true
    }
    fn prox_optimality(&self, x: &Vector, y: &Vector, _step: f64, tol: &Tolerance) -> bool {
        if !self.contains(y, tol) {
            return false;
        }
        // x - y must lie in the normal cone at y: equal to some theta on the
        // support of y and at most theta elsewhere.
        let v = x - y;
        let slack = tol.allowance(x.amax()) * 10.0;
        let support: Vec<f64> = v.iter().zip(y.iter()).filter(|(_, &yi)| yi > slack).map(|(&vi, _)| vi).collect();
        let Some(&theta) = support.first() else { return false };
        support.iter().all(|&vi| (vi - theta).abs() <= slack)
            && v.iter().zip(y.iter()).all(|(&vi, &yi)| yi > slack || vi <= theta + slack)
    }
}

/// Soft thresholding.
pub fn prox_l1(x: &Vector, weight: f64) -> Vector {
    x.map(|t| t.signum() * (t.abs() - weight).max(0.0))
}

/// Euclidean projection onto `{x >= 0, Σx = 1}` (sort-based).
pub fn project_simplex(x: &Vector) -> Vector {
    let mut u: Vec<f64> = x.iter().cloned().collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        css += uj;
        let t = (css - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    x.map(|t| (t - theta).max(0.0))
}

/// Central-difference gradient.
pub fn finite_diff_gradient(f: &dyn Objective, x: &Vector, h: f64) -> Result<Vector, Error> {
    if !(h > 0.0) {
        return Err(invalid("finite-difference step must be positive"));
    }
    let mut g = Vector::zeros(x.len());
    let mut xp = x.clone();
    for i in 0..x.len() {
        let xi = x[i];
        xp[i] = xi + h;
        let fp = f.value(&xp);
        xp[i] = xi - h;
        let fm = f.value(&xp);
        xp[i] = xi;
        g[i] = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}

// ---------------------------------------------------------------- composite

/// `F = f + h` with `f` smooth and `h` prox-friendly.
#[derive(Clone)]
pub struct CompositeProblem {
    pub f: Arc<dyn Objective>,
    pub h: Arc<dyn Nonsmooth>,
    /// Minimizer of `F` and `F*` when known.
    pub optimum: Option<Optimum>,
}

impl fmt::Debug for CompositeProblem {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(fm, "Composite({} + {})", self.f.name(), self.h.name())
    }
}

impl CompositeProblem {
    pub fn new(f: Arc<dyn Objective>, h: Arc<dyn Nonsmooth>, optimum: Option<Optimum>) -> Self {
        CompositeProblem { f, h, optimum }
    }

    /// `h ≡ 0`, inheriting the optimum of `f`.
    pub fn smooth(f: Arc<dyn Objective>) -> Self {
        let optimum = f.optimum();
        CompositeProblem { f, h: Arc::new(Zero), optimum }
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    pub fn value(&self, x: &Vector) -> f64 {
        self.f.value(x) + self.h.value(x)
    }

    /// Norm of the gradient mapping `L (x - prox_{h/L}(x - ∇f(x)/L))`.
    pub fn stationarity(&self, x: &Vector) -> f64 {
        let g = self.f.gradient(x);
        if self.h.is_zero() {
            return g.norm();
        }
        let l = self.f.params().l;
        let p = self.h.prox(&(x - &g / l), 1.0 / l);
        l * (x - p).norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn quadratic_examples() {
        let q = make_quadratic(&[1.0, 10.0], Vector::zeros(2)).unwrap();
        let x = v(&[1.0, 1.0]);
        assert_eq!(q.value(&x), 5.5);
        assert_eq!(q.gradient(&x), v(&[1.0, 10.0]));
        let p = q.prox(&x, 1.0).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 1.0 / 11.0).abs() < 1e-15);
        assert!(make_quadratic(&[], Vector::zeros(0)).is_err());
    }

    #[test]
    fn rotated_quadratic_prox_matches_linear_solve() {
        let q = make_quadratic_rotated(&[1.0, 3.0, 9.0], v(&[1.0, -2.0, 0.5]), Some(7)).unwrap();
        let x = v(&[0.3, 0.1, -1.0]);
        let lam = 0.7;
        let h = q.hessian();
        let a = DMatrix::identity(3, 3) + &h * lam;
        let rhs = &x + &h * q.optimum().unwrap().x * lam;
        let want = crate::linalg::solve(&a, &rhs).unwrap();
        assert!((q.prox(&x, lam).unwrap() - want).amax() < 1e-12);
    }

    #[test]
    fn huber_examples() {
        let h = make_huber(0.1, 1.0, 1).unwrap();
        assert!((h.value(&v(&[1.0])) - 0.095).abs() < 1e-15);
        assert!((h.gradient(&v(&[1.0]))[0] - 0.1).abs() < 1e-15);
        assert_eq!(h.value(&v(&[0.0])), 0.0);
        // branches agree at the kink
        assert!((h.phi(0.1) - 0.5 * 0.01).abs() < 1e-16);
        assert!((h.dphi(0.1) - 0.1).abs() < 1e-16);
    }

    #[test]
    fn huber_prox_optimal() {
        let h = make_huber(0.3, 2.0, 3).unwrap();
        let x = v(&[2.0, 0.2, -0.9]);
        let lam = 0.4;
        let y = h.prox(&x, lam).unwrap();
        let r = &y - &x + h.gradient(&y) * lam;
        assert!(r.amax() < 1e-14);
    }

    #[test]
    fn heb_power_examples() {
        let f = make_heb_power(4.0, 2, 1.0).unwrap();
        let x = v(&[1.0, 0.0]);
        assert_eq!(f.value(&x), 0.25);
        assert_eq!(f.gradient(&x), v(&[1.0, 0.0]));
        assert_eq!(f.gradient(&Vector::zeros(2)), Vector::zeros(2));
        let f2 = make_heb_power(2.0, 2, 5.0).unwrap();
        assert_eq!(f2.gradient(&v(&[3.0, -1.0])), v(&[3.0, -1.0]));
        assert!(make_heb_power(1.5, 2, 1.0).is_err());
    }

    #[test]
    fn prox_l1_examples() {
        assert_eq!(prox_l1(&v(&[2.0, -0.5]), 1.0), v(&[1.0, 0.0]));
        let x = v(&[0.3, -4.0]);
        assert_eq!(prox_l1(&x, 0.0), x);
    }

    #[test]
    fn simplex_examples() {
        assert_eq!(project_simplex(&v(&[0.5, 0.5])), v(&[0.5, 0.5]));
        let p = project_simplex(&v(&[2.0, 0.0, -1.0]));
        assert_eq!(p, v(&[1.0, 0.0, 0.0]));
        let tol = Tolerance::default();
        let x = v(&[0.4, 0.9, -0.3, 0.2]);
        let y = project_simplex(&x);
        assert!(Simplex.prox_optimality(&x, &y, 1.0, &tol));
        assert!(!Simplex.prox_optimality(&x, &v(&[0.25, 0.25, 0.25, 0.25]), 1.0, &tol));
    }

    #[test]
    fn finite_differences() {
        let q = make_quadratic(&[1.0, 10.0], Vector::zeros(2)).unwrap();
        let x = v(&[1.0, 1.0]);
        let g = finite_diff_gradient(&q, &x, 1e-5).unwrap();
        assert!((g - q.gradient(&x)).norm() <= 1e-6 * 10.0);
        let h = make_huber(0.1, 1.0, 1).unwrap();
        let g = finite_diff_gradient(&h, &v(&[-0.5]), 1e-5).unwrap();
        assert!((g[0] + 0.1).abs() <= 1e-6);
        assert!(finite_diff_gradient(&q, &x, 0.0).is_err());
    }

    #[test]
    fn class_params() {
        assert!(ClassParams::new(1.0, 1.0).is_err());
        let p = ClassParams::new(0.0, 2.0).unwrap();
        assert_eq!(p.kappa(), f64::INFINITY);
        assert_eq!(ClassParams::new(1.0, 4.0).unwrap().q(), 0.25);
    }
}
