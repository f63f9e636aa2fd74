use thiserror::Error;

/// Errors raised by constructors, channels and theorem checkers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian: max asymmetry {max_asymmetry:e}")]
    NotHermitian { max_asymmetry: f64 },

    #[error("operator is not positive semidefinite: min eigenvalue {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("operator trace {trace} is not 1")]
    NotNormalized { trace: f64 },

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("vectors are not orthonormal: max overlap defect {max_overlap:e}")]
    NotOrthonormal { max_overlap: f64 },

    #[error("desk-scale cap exceeded: {what} ({size} > {cap})")]
    CapExceeded { what: String, size: usize, cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("hypothesis violated: {what} (defect {defect:e})")]
    HypothesisViolated { what: String, defect: f64 },

    #[error("unknown theorem id `{0}`")]
    UnknownTheorem(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(expected: impl std::fmt::Display, found: impl std::fmt::Display) -> Self {
        Error::ShapeMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
