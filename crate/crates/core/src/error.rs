use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum PsdpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix entry at ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },

    #[error("numerical failure: {0}")]
    Numeric(String),

    /// `X` is numerically zero; every PSD matrix is optimal with value `‖B‖_F²`.
    #[error("degenerate problem: X is zero (infimum is ||B||_F^2 = {infimum})")]
    Degenerate { infimum: f64 },

    /// The kernel condition fails, so no PSD matrix attains the infimum.
    #[error("infimum is not attained; use the epsilon-approximate assembly")]
    NotAttained,

    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("inapplicable: {0}")]
    Inapplicable(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PsdpError>;
