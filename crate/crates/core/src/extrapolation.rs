//! Nonlinear (Anderson-type) acceleration. Given pairs `(x_i, ∇f(x_i))`,
//! find weights `c` with `Σc_i = 1` minimizing `‖Σ c_i ∇f(x_i)‖` and combine
//! the iterates (or gradient steps from them) with those weights.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::driver::Recorder;
use crate::error::{invalid, Error};
use crate::linalg::{solve, spectral_norm_psd};
use crate::oracles::{CompositeProblem, Objective, Vector};
use crate::prox_outer::golden_section;
use crate::trace::{Method, StepState, Trace};

const POWER_SEED: u64 = 0x5eed;

/// Ordered pairs `(x_i, g_i)`, oldest first, optionally capped at `m`.
#[derive(Clone, Debug, Default)]
pub struct PairBuffer {
    pairs: VecDeque<(Vector, Vector)>,
    capacity: Option<usize>,
}

impl PairBuffer {
    pub fn new(capacity: Option<usize>) -> Self {
        PairBuffer { pairs: VecDeque::new(), capacity }
    }

    pub fn from_pairs(pairs: Vec<(Vector, Vector)>) -> Result<Self, Error> {
        let mut b = PairBuffer::new(None);
        for (x, g) in pairs {
            b.push(x, g)?;
        }
        Ok(b)
    }

    /// Appends a pair; returns the evicted one when over capacity.
    pub fn push(&mut self, x: Vector, g: Vector) -> Result<Option<(Vector, Vector)>, Error> {
        if x.len() != g.len() || self.pairs.front().is_some_and(|(x0, _)| x0.len() != x.len()) {
            return Err(invalid("pair dimensions differ"));
        }
        self.pairs.push_back((x, g));
        Ok(match self.capacity {
            Some(m) if self.pairs.len() > m => self.pairs.pop_front(),
            _ => None,
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = &(Vector, Vector)> {
        self.pairs.iter()
    }

    /// `G = [g_0, …, g_k]`
    pub fn gradients(&self) -> DMatrix<f64> {
        let cols: Vec<Vector> = self.pairs.iter().map(|(_, g)| g.clone()).collect();
        DMatrix::from_columns(&cols)
    }

    /// `Σ c_i (x_i − h g_i)`
    pub fn combine(&self, c: &DVector<f64>, h: f64) -> Vector {
        let d = self.pairs[0].0.len();
        self.pairs
            .iter()
            .zip(c.iter())
            .fold(Vector::zeros(d), |acc, ((x, g), &ci)| acc + (x - g * h) * ci)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtrapolationResult {
    pub c: DVector<f64>,
    pub x_extr: Vector,
    /// condition number of the normalized Gram matrix
    pub gram_cond: f64,
}

/// Reference weights for the regularized variant.
#[derive(Clone, Debug, PartialEq)]
pub enum CRef {
    /// `1/k` on every pair
    Uniform,
    /// all weight on the newest pair
    Last,
    Custom(DVector<f64>),
}

impl CRef {
    fn vector(&self, k: usize) -> Result<DVector<f64>, Error> {
        let v = match self {
            CRef::Uniform => DVector::from_element(k, 1.0 / k as f64),
            CRef::Last => {
                let mut v = DVector::zeros(k);
                v[k - 1] = 1.0;
                v
            }
            CRef::Custom(v) => {
                if v.len() != k {
                    return Err(invalid(format!("c_ref has {} entries for {k} pairs", v.len())));
                }
                v.clone()
            }
        };
        if (v.sum() - 1.0).abs() > 1e-12 {
            return Err(invalid("c_ref must sum to 1"));
        }
        Ok(v)
    }
}

/// `GᵀG/‖GᵀG‖₂`, with the norm from seeded power iteration.
fn normalized_gram(buf: &PairBuffer) -> Result<DMatrix<f64>, Error> {
    if buf.is_empty() {
        return Err(invalid("extrapolation needs at least one pair"));
    }
    let g = buf.gradients();
    let gram = g.transpose() * g;
    let s = spectral_norm_psd(&gram, POWER_SEED);
    if s == 0.0 {
        // every gradient vanishes; any weights are optimal
        return Ok(gram);
    }
    Ok(gram / s)
}

fn condition(m: &DMatrix<f64>) -> f64 {
    let ev = m.clone().symmetric_eigen().eigenvalues;
    let (lo, hi) = ev.iter().fold((f64::INFINITY, 0f64), |(lo, hi), &e| (lo.min(e.abs()), hi.max(e.abs())));
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Weights minimizing `‖Gc‖` subject to `Σc = 1`, from the optimality system
/// `[𝒢 1; 1ᵀ 0][c; ν] = [0; 1]`. When `𝒢` is invertible this is `z/(zᵀ1)`
/// with `𝒢z = 1`; it stays well posed when the gradients are linearly
/// dependent but no combination summing to zero annihilates them.
fn optimal_weights(gram: &DMatrix<f64>) -> Result<DVector<f64>, Error> {
    let k = gram.nrows();
    if k == 1 {
        return Ok(DVector::from_element(1, 1.0));
    }
    let mut kkt = DMatrix::zeros(k + 1, k + 1);
    kkt.view_mut((0, 0), (k, k)).copy_from(gram);
    for i in 0..k {
        kkt[(i, k)] = 1.0;
        kkt[(k, i)] = 1.0;
    }
    let mut rhs = DVector::zeros(k + 1);
    rhs[k] = 1.0;
    let sol = solve(&kkt, &rhs)?;
    let c = sol.rows(0, k).into_owned();
    let s = c.sum();
    Ok(c / s)
}

/// Offline nonlinear acceleration: `x_extr = Σ c_i x_i`.
pub fn offline_na(buf: &PairBuffer) -> Result<ExtrapolationResult, Error> {
    na_mixing(buf, 0.0)
}

/// Mixing variant: `x_extr = Σ c_i (x_i − h g_i)`.
pub fn na_mixing(buf: &PairBuffer, h: f64) -> Result<ExtrapolationResult, Error> {
    let gram = normalized_gram(buf)?;
    let c = optimal_weights(&gram)?;
    Ok(ExtrapolationResult { x_extr: buf.combine(&c, h), gram_cond: condition(&gram), c })
}

fn solve_pd(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if let Some(ch) = a.clone().cholesky() {
        return ch.solve(b);
    }
    if let Some(x) = a.clone().lu().solve(b) {
        return x;
    }
    a.clone().svd(true, true).solve(b, 0.0).expect("svd with both factors")
}

/// Regularized nonlinear acceleration:
/// `(𝒢 + λI)w = λ c_ref`, `(𝒢 + λI)z = 1`, `c = w + z (1 − wᵀ1)/(zᵀ1)`.
pub fn rna(buf: &PairBuffer, h: f64, lambda: f64, c_ref: &CRef) -> Result<ExtrapolationResult, Error> {
    if !(lambda > 0.0) {
        return Err(invalid("regularization must be positive"));
    }
    let gram = normalized_gram(buf)?;
    let k = gram.nrows();
    let cr = c_ref.vector(k)?;
    let a = &gram + DMatrix::identity(k, k) * lambda;
    let w = solve_pd(&a, &(&cr * lambda));
    let z = solve_pd(&a, &DVector::from_element(k, 1.0));
    let c = &w + &z * ((1.0 - w.sum()) / z.sum());
    Ok(ExtrapolationResult { x_extr: buf.combine(&c, h), gram_cond: condition(&gram), c })
}

/// `c_ref = 1/k`: solve `(𝒢 + λI)z = 1/k` and normalize.
pub fn rna_simplified(buf: &PairBuffer, h: f64, lambda: f64) -> Result<ExtrapolationResult, Error> {
    if !(lambda > 0.0) {
        return Err(invalid("regularization must be positive"));
    }
    let gram = normalized_gram(buf)?;
    let k = gram.nrows();
    let a = &gram + DMatrix::identity(k, k) * lambda;
    let z = solve_pd(&a, &DVector::from_element(k, 1.0 / k as f64));
    let c = &z / z.sum();
    Ok(ExtrapolationResult { x_extr: buf.combine(&c, h), gram_cond: condition(&gram), c })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Safeguard {
    None,
    /// keep the extrapolation only if it beats every buffered iterate
    Descent,
    /// choose the mixing step by golden-section search on `[0, 4/L]`
    LineSearch,
}

/// Weights for the online loop: unregularized when `λ = 0`.
fn weights(buf: &PairBuffer, h: f64, lambda: f64, c_ref: &CRef) -> Result<ExtrapolationResult, Error> {
    if lambda == 0.0 {
        na_mixing(buf, h)
    } else {
        rna(buf, h, lambda, c_ref)
    }
}

/// Online nonlinear acceleration with memory `m`: each step appends
/// `(x_k, ∇f(x_k))` and moves to the extrapolation of the buffer.
pub fn online_rna(
    f: &dyn Objective,
    x0: &Vector,
    h: f64,
    lambda: f64,
    m: usize,
    n: usize,
    safeguard: Safeguard,
) -> Result<Trace, Error> {
    if m == 0 {
        return Err(invalid("memory must be at least 1"));
    }
    if !(lambda >= 0.0 && h >= 0.0) {
        return Err(invalid("h and lambda must be nonnegative"));
    }
    let l = f.params().l;
    let mut rec = Recorder::smooth(f, Method::Extrapolation);
    let mut buf = PairBuffer::new(Some(m));
    let mut values: VecDeque<f64> = VecDeque::new();
    let mut x = x0.clone();
    rec.push(0, &x, StepState::default())?;
    for k in 0..n {
        let g = rec.grad(&x);
        let plain = &x - &g * h;
        values.push_back(f.value(&x));
        if buf.push(x.clone(), g)?.is_some() {
            values.pop_front();
        }
        let (next, fallback) = match weights(&buf, h, lambda, &CRef::Uniform) {
            Err(Error::Singular { .. }) => (plain, true),
            Err(e) => return Err(e),
            Ok(r) => match safeguard {
                Safeguard::None => (r.x_extr, false),
                Safeguard::Descent => {
                    let best = values.iter().cloned().fold(f64::INFINITY, f64::min);
                    if f.value(&r.x_extr) < best {
                        (r.x_extr, false)
                    } else {
                        (plain, true)
                    }
                }
                Safeguard::LineSearch => {
                    let base = buf.combine(&r.c, 0.0);
                    let gc = &base - buf.combine(&r.c, 1.0);
                    let hs = golden_section(|t| f.value(&(&base - &gc * t)), 0.0, 4.0 / l, 20);
                    (&base - &gc * hs, false)
                }
            },
        };
        x = next;
        rec.push(k + 1, &x, StepState { fallback, ..Default::default() })?;
    }
    Ok(rec.finish())
}

/// Proximal variant: extrapolates the sequence
/// `z_{k+1} = prox_{γh}(z_k) − γ∇f(prox_{γh}(z_k))` with the regularized
/// weights and reports `x_k = prox_{γh}(z_k)`.
pub fn prox_rna(
    problem: &CompositeProblem,
    x0: &Vector,
    gamma: f64,
    lambda: f64,
    c_ref: &CRef,
    m: Option<usize>,
    n: usize,
) -> Result<Trace, Error> {
    if !(gamma > 0.0 && lambda > 0.0) {
        return Err(invalid("gamma and lambda must be positive"));
    }
    if m == Some(0) {
        return Err(invalid("memory must be at least 1"));
    }
    let mut rec = Recorder::composite(problem, Method::Extrapolation);
    let mut buf = PairBuffer::new(m);
    rec.push(0, x0, StepState::default())?;
    if n == 0 {
        return Ok(rec.finish());
    }
    let mut z = x0 - rec.grad(x0) * gamma;
    let mut x = rec.prox_h(&z, gamma);
    rec.push(1, &x, StepState { z: Some(z.clone()), ..Default::default() })?;
    for k in 1..n {
        let g = (rec.grad(&x) * gamma + &z - &x) / gamma;
        buf.push(z.clone(), g)?;
        let c_ref = match c_ref {
            CRef::Custom(v) if v.len() != buf.len() => CRef::Uniform,
            other => other.clone(),
        };
        z = rna(&buf, gamma, lambda, &c_ref)?.x_extr;
        x = rec.prox_h(&z, gamma);
        rec.push(k + 1, &x, StepState { z: Some(z.clone()), ..Default::default() })?;
    }
    Ok(rec.finish())
}
