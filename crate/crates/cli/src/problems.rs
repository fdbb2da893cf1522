//! Problem specifications of the form `kind:key=value,...`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use accel::composite::{lasso_problem, simplex_problem};
use accel::oracles::{make_heb_power, make_huber, random_quadratic, CompositeProblem, Objective, Vector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemSpec {
    Quad { d: usize, mu: f64, l: f64 },
    Huber { d: usize, tau: f64, l: f64 },
    Heb { d: usize, r: f64, radius: f64 },
    Lasso { d: usize, mu: f64, l: f64, weight: f64 },
    Simplex { d: usize, mu: f64, l: f64 },
}

fn take<T: std::str::FromStr>(kv: &mut BTreeMap<String, String>, key: &str, default: T) -> Result<T, String> {
    match kv.remove(key) {
        None => Ok(default),
        Some(v) => v.parse().map_err(|_| format!("bad value {v:?} for problem parameter {key}")),
    }
}

impl ProblemSpec {
    pub fn parse(s: &str) -> Result<Self, String> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut kv = BTreeMap::new();
        for item in rest.split(',').filter(|t| !t.is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(|| format!("expected key=value, got {item:?}"))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let kv = &mut kv;
        let spec = match kind.trim() {
            "quad" => ProblemSpec::Quad { d: take(kv, "d", 20)?, mu: take(kv, "mu", 0.01)?, l: take(kv, "L", 1.0)? },
            "huber" => ProblemSpec::Huber { d: take(kv, "d", 10)?, tau: take(kv, "tau", 0.1)?, l: take(kv, "L", 1.0)? },
            "heb" => ProblemSpec::Heb { d: take(kv, "d", 10)?, r: take(kv, "r", 4.0)?, radius: take(kv, "radius", 2.0)? },
            "lasso" => ProblemSpec::Lasso {
                d: take(kv, "d", 20)?,
                mu: take(kv, "mu", 0.05)?,
                l: take(kv, "L", 1.0)?,
                weight: take(kv, "weight", 0.1)?,
            },
            "simplex" => {
                ProblemSpec::Simplex { d: take(kv, "d", 20)?, mu: take(kv, "mu", 0.05)?, l: take(kv, "L", 1.0)? }
            }
            other => return Err(format!("unknown problem kind {other:?} (quad, huber, heb, lasso, simplex)")),
        };
        if let Some(k) = kv.keys().next() {
            return Err(format!("unknown parameter {k:?} for problem {}", kind.trim()));
        }
        Ok(spec)
    }

    /// The problem and a starting point, both determined by `seed`.
    pub fn build(&self, seed: u64) -> Result<(CompositeProblem, Vector), String> {
        let err = |e: accel::Error| e.to_string();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_5a27);
        let gauss = |d: usize, rng: &mut ChaCha8Rng| accel::linalg::gaussian_vector(d, rng);
        Ok(match *self {
            ProblemSpec::Quad { d, mu, l } => {
                let f: Arc<dyn Objective> = Arc::new(random_quadratic(d, mu, l, seed).map_err(err)?);
                let x0 = gauss(d, &mut rng);
                (CompositeProblem::smooth(f), x0)
            }
            ProblemSpec::Huber { d, tau, l } => {
                let f: Arc<dyn Objective> = Arc::new(make_huber(tau, l, d).map_err(err)?);
                let x0 = gauss(d, &mut rng);
                (CompositeProblem::smooth(f), x0)
            }
            ProblemSpec::Heb { d, r, radius } => {
                let f: Arc<dyn Objective> = Arc::new(make_heb_power(r, d, radius).map_err(err)?);
                let g = gauss(d, &mut rng);
                let x0 = &g / g.norm() * (0.5 * radius);
                (CompositeProblem::smooth(f), x0)
            }
            ProblemSpec::Lasso { d, mu, l, weight } => {
                (lasso_problem(d, mu, l, weight, seed).map_err(err)?, gauss(d, &mut rng))
            }
            ProblemSpec::Simplex { d, mu, l } => {
                (simplex_problem(d, mu, l, seed).map_err(err)?, Vector::from_element(d, 1.0 / d as f64))
            }
        })
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemSpec::Quad { d, mu, l } => write!(f, "quad:d={d},mu={mu},L={l}"),
            ProblemSpec::Huber { d, tau, l } => write!(f, "huber:d={d},tau={tau},L={l}"),
            ProblemSpec::Heb { d, r, radius } => write!(f, "heb:d={d},r={r},radius={radius}"),
            ProblemSpec::Lasso { d, mu, l, weight } => write!(f, "lasso:d={d},mu={mu},L={l},weight={weight}"),
            ProblemSpec::Simplex { d, mu, l } => write!(f, "simplex:d={d},mu={mu},L={l}"),
        }
    }
}

impl Serialize for ProblemSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        let p = ProblemSpec::parse("quad:d=20").unwrap();
        assert_eq!(p, ProblemSpec::Quad { d: 20, mu: 0.01, l: 1.0 });
        assert_eq!(ProblemSpec::parse(&p.to_string()).unwrap(), p);
        assert!(ProblemSpec::parse("quad:dim=3").is_err());
        assert!(ProblemSpec::parse("cube").is_err());
        assert!(ProblemSpec::parse("huber:d=x").is_err());
    }

    #[test]
    fn build_is_seeded() {
        let p = ProblemSpec::parse("quad:d=5").unwrap();
        let (_, a) = p.build(3).unwrap();
        let (_, b) = p.build(3).unwrap();
        let (_, c) = p.build(4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
