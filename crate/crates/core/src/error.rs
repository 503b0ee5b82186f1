use alloc::string::String;

/// Errors raised by models, samplers, oracles and tests.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension {0} is not supported (expected 1..=6)")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("covariance is not compactly supported")]
    NonCompactSupport,

    #[error("power spectrum reaches {min:e}, below the tolerance -{tolerance:e}: not a covariance")]
    NotPositiveDefinite { min: f64, tolerance: f64 },

    #[error("quadrature did not converge: value {value:e}, error estimate {error:e}")]
    Quadrature { value: f64, error: f64 },

    #[error("invalid scaling mode for d={dim}: {reason}")]
    InvalidMode { dim: usize, reason: String },

    #[error("R^(xi)|xi|^-2 is not integrable at the origin (fitted exponent {alpha:.3})")]
    NonIntegrable { alpha: f64 },

    #[error("sigma routes disagree: spectral {spectral:e} vs real-space {real_space:e}")]
    CrossValidation { spectral: f64, real_space: f64 },

    #[error("circulant embedding failed: clamped eigenvalue mass fraction {0:e}")]
    Embedding(f64),

    #[error("grid of {cells} cells exceeds the 2^30 limit; use the feature sampler")]
    GridTooLarge { cells: u128 },

    #[error("point outside the field domain")]
    OutOfDomain,

    #[error("guard exceeded: {0}")]
    Guard(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
