//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by solvers, simulators, and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// The MDP failed validation; the report lists every violation.
    #[error("invalid MDP:\n{0}")]
    InvalidMdp(crate::mdp::ValidationReport),

    /// Shapes of two inputs do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The kernel is not irreducible and aperiodic.
    #[error("kernel not ergodic: {0}")]
    NotErgodic(String),

    /// An argument is outside its documented range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A linear solve or fit failed numerically.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The state-action space exceeds a per-step-solve size guard.
    #[error("state-action space too large: {size} > {limit}")]
    SizeGuard { size: usize, limit: usize },

    /// An integrated table entry exceeded the blow-up guard.
    #[error("blow-up guard tripped at t={t}: |entry|={value:.3e} > {limit:.1e}")]
    BlowUp { t: f64, value: f64, limit: f64 },

    /// A simulation was stepped past its horizon.
    #[error("horizon exhausted: step {step} of {total}")]
    HorizonExhausted { step: u64, total: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn dimension_mismatch(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
