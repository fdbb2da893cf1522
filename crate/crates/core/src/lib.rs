//! First-order methods for smooth and composite convex minimization, together
//! with the machinery needed to check their convergence certificates on
//! concrete instances.
//!
//! Every method returns a [`Trace`]: one record per iteration carrying the
//! reported iterate, objective information when an optimum is known, oracle
//! counters and the coefficient state needed to evaluate potential functions
//! after the fact (see [`certify`]).

pub mod certify;
pub mod composite;
pub mod error;
pub mod extrapolation;
pub mod linalg;
pub mod momentum;
pub mod oracles;
pub mod poly_methods;
pub mod prox_outer;
pub mod restart;
pub mod tol;
pub mod trace;

mod driver;

pub use error::Error;
pub use oracles::{ClassParams, CompositeProblem, Nonsmooth, Objective, Optimum, Vector};
pub use tol::Tolerance;
pub use trace::{Method, Record, StepState, Trace};

pub type Result<T> = std::result::Result<T, Error>;
