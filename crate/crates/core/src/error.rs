use alloc::string::String;

/// Failure modes shared by every construction and verification routine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite evaluation at x = {at}")]
    EvaluationFailure { at: f64 },
    #[error("infeasible: {reason} (witness x = {witness})")]
    Infeasible { reason: String, witness: f64 },
    #[error("degenerate map: {0}")]
    Degenerate(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("budget exhausted: {0}")]
    Budget(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! domain_err {
    ($($arg:tt)*) => {
        $crate::error::Error::Domain(alloc::format!($($arg)*))
    };
}
pub(crate) use domain_err;
