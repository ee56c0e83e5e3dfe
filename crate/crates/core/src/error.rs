use thiserror::Error;

/// Errors produced by the estimators, planners and experiment harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("trim level k = {k} is too large for n = {n} (need 2k < n)")]
    TrimTooLarge { k: usize, n: usize },

    #[error("infeasible trim plan: k = {k} >= n/2 with n = {n}")]
    InfeasibleTrim { k: usize, n: usize },

    #[error("moment of order {p} does not exist (family bound {bound})")]
    MomentDoesNotExist { p: f64, bound: f64 },

    #[error("epsilon = {0} outside [0, 1/2)")]
    EpsilonOutOfRange(f64),

    #[error("covariance is not positive semidefinite (jitter ladder exhausted at {jitter:e})")]
    NotPsd { jitter: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
