//! Global tolerance policy: an inequality `lhs <= rhs` is accepted when
//! `rhs - lhs >= -(atol + rtol * magnitude)`.

use crate::error::{invalid, Error};

pub const ENV_VAR: &str = "ACCEL_TOL";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub atol: f64,
    pub rtol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { atol: 1e-10, rtol: 1e-9 }
    }
}

impl Tolerance {
    pub fn new(atol: f64, rtol: f64) -> Result<Self, Error> {
        if !(atol >= 0.0 && rtol >= 0.0 && atol.is_finite() && rtol.is_finite()) {
            return Err(invalid(format!("tolerances must be finite and nonnegative, got ({atol}, {rtol})")));
        }
        Ok(Tolerance { atol, rtol })
    }

    /// Parses `"atol,rtol"`.
    pub fn parse(s: &str) -> Result<Self, Error> {
        let mut it = s.split(',').map(str::trim);
        let (a, r) = match (it.next(), it.next(), it.next()) {
            (Some(a), Some(r), None) => (a, r),
            _ => return Err(invalid(format!("expected \"atol,rtol\", got {s:?}"))),
        };
        let a: f64 = a.parse().map_err(|_| invalid(format!("bad atol {a:?}")))?;
        let r: f64 = r.parse().map_err(|_| invalid(format!("bad rtol {r:?}")))?;
        Tolerance::new(a, r)
    }

    /// Reads `ACCEL_TOL`, falling back to the defaults when unset.
    pub fn from_env() -> Result<Self, Error> {
        match std::env::var(ENV_VAR) {
            Ok(s) => Tolerance::parse(&s),
            Err(_) => Ok(Tolerance::default()),
        }
    }

    pub fn allowance(&self, magnitude: f64) -> f64 {
        self.atol + self.rtol * magnitude.abs()
    }

    pub fn holds(&self, slack: f64, magnitude: f64) -> bool {
        slack >= -self.allowance(magnitude)
    }
}
