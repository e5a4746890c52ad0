use thiserror::Error;

use crate::states::ValidationReport;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("vector or coefficients not normalized (norm² = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),
    #[error("marginal {0} is degenerate")]
    DegenerateMarginal(&'static str),
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("invalid density matrix: {}", .0.summary())]
    InvalidState(Box<ValidationReport>),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

impl Error {
    /// Whether the error stems from malformed input rather than a numerical
    /// breakdown.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::NumericalFailure(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
