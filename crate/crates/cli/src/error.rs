use minbs_core::states::ValidationReport;
use minbs_core::Error;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("invalid density matrix: {}", .0.summary())]
    InvalidState(Box<ValidationReport>),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{0} audit check(s) failed")]
    AuditFailed(usize),
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::AuditFailed(_) => 1,
            CliError::Invalid(_) | CliError::InvalidState(_) => 2,
            CliError::Numerical(_) | CliError::Output(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidState(report) => CliError::InvalidState(report),
            Error::NumericalFailure(msg) => CliError::Numerical(msg),
            other => CliError::Invalid(other.to_string()),
        }
    }
}
