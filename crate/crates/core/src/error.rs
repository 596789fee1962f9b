use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("asymmetric trap (eps1 = {eps1}, eps2 = {eps2}): use the diagonal-Kossakowski weak-coupling path")]
    AsymmetricTrap { eps1: f64, eps2: f64 },

    #[error("{what} is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { what: String, min_eigenvalue: f64 },

    #[error("superoperator guard exceeded: dim {dim} > {limit}")]
    GuardExceeded { dim: usize, limit: usize },

    #[error("integration failed at t = {time}: {reason}")]
    IntegrationFailure { time: f64, reason: String },

    #[error("step size not converged: dt-halving shifted <J(t_max)> by {shift:e} (tolerance {tolerance:e})")]
    StepSize { shift: f64, tolerance: f64 },

    #[error("calibration fit failed: {0}")]
    FitFailure(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
