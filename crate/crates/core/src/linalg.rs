//! Small dense helpers. Systems here are at most a few dozen unknowns.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Error;

/// Relative pivot threshold below which a system is declared singular.
pub const PIVOT_REL: f64 = 1e-13;

/// Solves `a x = b` by LU with partial pivoting. A pivot smaller than
/// `PIVOT_REL * max|a_ij|` is reported as [`Error::Singular`].
pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>, Error> {
    let scale = a.amax();
    let lu = a.clone().lu();
    let u = lu.u();
    let mut smallest = f64::INFINITY;
    for i in 0..u.nrows().min(u.ncols()) {
        smallest = smallest.min(u[(i, i)].abs());
    }
    if !(smallest > PIVOT_REL * scale) || scale == 0.0 {
        return Err(Error::Singular { pivot: smallest });
    }
    lu.solve(b).ok_or(Error::Singular { pivot: smallest })
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by 100
/// power iterations from a seeded start.
pub fn spectral_norm_psd(a: &DMatrix<f64>, seed: u64) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = DVector::from_fn(n, |_, _| 1.0 + rng.random::<f64>());
    v /= v.norm();
    let mut est = 0.0;
    for _ in 0..100 {
        let w = a * &v;
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        est = v.dot(&w);
        v = w / nw;
    }
    let w = a * &v;
    est.max(v.dot(&w)).max(0.0)
}

pub fn gaussian_vector(d: usize, rng: &mut impl Rng) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample(StandardNormal))
}

/// Haar-ish random orthogonal matrix from the QR factorization of a Gaussian
/// matrix, with signs fixed so the result is deterministic given the rng.
pub fn random_orthogonal(d: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

pub fn all_finite(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}
