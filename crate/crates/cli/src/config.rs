//! Experiment configuration: a JSON file and/or command-line flags, merged
//! and validated before anything runs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::problems::ProblemSpec;

/// Raw configuration as read from JSON or flags. Every key is optional;
/// defaults are filled in by [`ExperimentConfig::resolve`].
#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub method: Option<String>,
    pub problem: Option<String>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub mu: Option<f64>,
    #[serde(rename = "L")]
    pub l: Option<f64>,
    pub lambda: Option<f64>,
    pub delta: Option<f64>,
    pub form: Option<String>,
    pub mode: Option<String>,
    /// `random` (default) or `opt`
    pub x0: Option<String>,
}

/// Configuration after defaults and validation; this is what the sidecar
/// records.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Resolved {
    pub method: String,
    pub problem: ProblemSpec,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub mu: Option<f64>,
    #[serde(rename = "L")]
    pub l: Option<f64>,
    pub lambda: Option<f64>,
    pub delta: Option<f64>,
    pub form: Option<String>,
    pub mode: Option<String>,
    pub x0: String,
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Values set in `over` replace those in `self`.
    pub fn merge(self, over: ExperimentConfig) -> Self {
        ExperimentConfig {
            method: over.method.or(self.method),
            problem: over.problem.or(self.problem),
            n: over.n.or(self.n),
            seed: over.seed.or(self.seed),
            out: over.out.or(self.out),
            mu: over.mu.or(self.mu),
            l: over.l.or(self.l),
            lambda: over.lambda.or(self.lambda),
            delta: over.delta.or(self.delta),
            form: over.form.or(self.form),
            mode: over.mode.or(self.mode),
            x0: over.x0.or(self.x0),
        }
    }

    pub fn resolve(self) -> Result<Resolved, String> {
        let method = self.method.ok_or("missing required key \"method\"")?;
        let problem = ProblemSpec::parse(self.problem.as_deref().unwrap_or("quad"))?;
        for (name, v) in [("mu", self.mu), ("L", self.l), ("lambda", self.lambda), ("delta", self.delta)] {
            if let Some(v) = v {
                if !v.is_finite() || v < 0.0 {
                    return Err(format!("{name} must be finite and nonnegative, got {v}"));
                }
            }
        }
        if let Some(l) = self.l {
            if l == 0.0 {
                return Err("L must be positive".into());
            }
        }
        let x0 = self.x0.unwrap_or_else(|| "random".into());
        if x0 != "random" && x0 != "opt" {
            return Err(format!("x0 must be \"random\" or \"opt\", got {x0:?}"));
        }
        Ok(Resolved {
            method,
            problem,
            n: self.n.unwrap_or(100),
            seed: self.seed.unwrap_or(0),
            out: self.out.unwrap_or_else(|| PathBuf::from("trace.csv")),
            mu: self.mu,
            l: self.l,
            lambda: self.lambda,
            delta: self.delta,
            form: self.form,
            mode: self.mode,
            x0,
        })
    }
}
