use crate::trace::Trace;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A coordinate became non-finite. `partial` holds every record up to the
    /// last finite one.
    #[error("iteration diverged at k = {k}")]
    Diverged { k: usize, partial: Box<Trace> },

    #[error("singular linear system (pivot {pivot:e} below threshold)")]
    Singular { pivot: f64 },

    #[error("backtracking exceeded {0} increases of the smoothness estimate")]
    RunawayL(usize),

    #[error("inner solve failed at outer step {k}: {msg}")]
    InnerSolve {
        k: usize,
        msg: String,
        partial: Box<Trace>,
    },

    #[error("inner solver broke its rate contract at outer step {k}: {iters} iterations exceed cap {cap}")]
    ContractViolation { k: usize, iters: usize, cap: usize },

    #[error("inconsistent certificate: stored residual differs from recomputed one by {0:e}")]
    InconsistentCertificate(f64),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
