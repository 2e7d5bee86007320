use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("the group identity is excluded here (formula is singular at the origin)")]
    IdentityPoint,

    #[error("structure is not Métivier: {0}")]
    NotMetivier(String),

    #[error("structure is invalid: {0}")]
    InvalidStructure(String),

    #[error("quadrature grid does not cover the support of the integrand")]
    SupportNotCovered,

    #[error("operator is not symmetric (max |A - A^T| = {0:e})")]
    NotSymmetric(f64),

    #[error("Lanczos did not converge after {iterations} iterations (worst residual {worst_residual:e})")]
    NotConverged {
        iterations: usize,
        worst_residual: f64,
        /// Best available Ritz values and residuals at termination.
        ritz_values: Vec<f64>,
        residuals: Vec<f64>,
    },

    #[error("Monte Carlo estimate has zero hits at |t| = {0}")]
    ZeroCount(f64),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
