//! Per-iteration records emitted by every method.

use std::collections::BTreeMap;

use crate::oracles::Vector;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Form {
    I,
    II,
    III,
}

/// Initialization rule for the smoothness estimate at each iteration of a
/// backtracking method.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BacktrackMode {
    /// `L_{k+1} = L_k`: the estimate never decreases.
    Monotone,
    /// `L_{k+1} = L_0` at each iteration.
    Reset,
    /// `L_{k+1} = max(L_0, beta L_k)`.
    Decrease(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dgf {
    Euclidean,
    Entropy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerKind {
    Gd,
    GdLineSearch,
    ConstMomentum,
}

/// Which algorithm produced a trace, with the constants its certificate needs.
#[derive(Clone, Debug, PartialEq)]
pub enum Method {
    Gd { gamma: f64, mu: f64, l: f64 },
    Chebyshev { mu: f64, l: f64 },
    HeavyBall { mu: f64, l: f64 },
    ConjugateGradient,
    Fgm { form: Form, mu: f64, l: f64 },
    Ogm { form: Form, n: usize, l: f64 },
    ConstMomentum { form: Form, mu: f64, l: f64 },
    Item { mu: f64, l: f64 },
    Tmm { mu: f64, l: f64 },
    Fista { mode: BacktrackMode, mu: f64, l0: f64, alpha: f64 },
    ProxAgm { mode: BacktrackMode, mu: f64, l0: f64, alpha: f64 },
    Bregman { dgf: Dgf, l: f64 },
    Monotone(Box<Method>),
    Ppa { mu: f64 },
    AccPpa { mu: f64, delta: f64 },
    Catalyst { inner: InnerKind, lambda: f64, mu: f64 },
    Restart,
    Extrapolation,
}

impl Method {
    pub fn name(&self) -> String {
        match self {
            Method::Gd { .. } => "gd".into(),
            Method::Chebyshev { .. } => "chebyshev".into(),
            Method::HeavyBall { .. } => "heavy_ball".into(),
            Method::ConjugateGradient => "cg".into(),
            Method::Fgm { .. } => "fgm".into(),
            Method::Ogm { .. } => "ogm".into(),
            Method::ConstMomentum { .. } => "const_momentum".into(),
            Method::Item { .. } => "item".into(),
            Method::Tmm { .. } => "tmm".into(),
            Method::Fista { .. } => "fista".into(),
            Method::ProxAgm { .. } => "prox_agm".into(),
            Method::Bregman { .. } => "bregman_agm".into(),
            Method::Monotone(m) => format!("monotone({})", m.name()),
            Method::Ppa { .. } => "ppa".into(),
            Method::AccPpa { .. } => "accel_inexact_ppa".into(),
            Method::Catalyst { .. } => "catalyst".into(),
            Method::Restart => "restart".into(),
            Method::Extrapolation => "rna".into(),
        }
    }
}

/// Coefficient state after iteration `k`. Which fields are populated depends
/// on the method; `None` means "not part of this method".
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepState {
    /// A_k
    pub acc: Option<f64>,
    /// B_k (non-monotone backtracking accumulator)
    pub bacc: Option<f64>,
    pub theta: Option<f64>,
    pub tau: Option<f64>,
    pub delta: Option<f64>,
    /// smoothness estimate used to produce this iterate
    pub l_est: Option<f64>,
    /// proximal step of the outer loop
    pub lambda: Option<f64>,
    pub x: Option<Vector>,
    pub y: Option<Vector>,
    pub z: Option<Vector>,
    /// the step fell back to a safeguard instead of the nominal update
    pub fallback: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub k: usize,
    /// The iterate the method reports at step k (its "output" sequence).
    pub point: Vector,
    pub value: f64,
    /// ‖∇f‖ for smooth problems, gradient-mapping norm for composite ones.
    pub grad_norm: f64,
    pub f_gap: Option<f64>,
    pub dist_opt: Option<f64>,
    pub potential: Option<f64>,
    pub grad_calls: u64,
    pub prox_calls: u64,
    pub inner_iters: u64,
    pub wall_ns: u128,
    pub state: StepState,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub method: Method,
    pub records: Vec<Record>,
    /// Scalar run metadata (counters, bound constants, chosen grid cell...).
    pub meta: BTreeMap<String, f64>,
    /// Per-outer-step inner iteration counts for nested methods.
    pub inner_runs: Vec<u64>,
}

impl Trace {
    pub fn new(method: Method) -> Self {
        Trace { method, records: Vec::new(), meta: BTreeMap::new(), inner_runs: Vec::new() }
    }

    pub fn last(&self) -> &Record {
        self.records.last().expect("trace has at least the initial record")
    }

    pub fn first(&self) -> &Record {
        &self.records[0]
    }

    pub fn points(&self) -> impl Iterator<Item = &Vector> {
        self.records.iter().map(|r| &r.point)
    }

    pub fn final_gap(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.f_gap)
    }

    pub fn grad_calls(&self) -> u64 {
        self.records.last().map_or(0, |r| r.grad_calls)
    }
}
