use std::path::Path;

use thiserror::Error;

use crate::scenario::ValidationError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid scenario: {0}")]
    Validation(ValidationError),

    #[error("cannot parse input: {0}")]
    Parse(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("{0}")]
    Core(#[from] toa_core::Error),

    /// Raised only under `--strict` once outputs are written.
    #[error("numerical integration did not converge: {0}")]
    NonConverged(String),
}

impl From<ValidationError> for CliError {
    fn from(e: ValidationError) -> Self {
        CliError::Validation(e)
    }
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    /// A core error raised while building `block`, reported as a validation failure.
    pub(crate) fn field(block: &str, e: toa_core::Error) -> Self {
        CliError::Validation(ValidationError {
            field: block.into(),
            message: e.to_string(),
        })
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Parse(_) => 2,
            CliError::NonConverged(_) => 3,
            CliError::Io { .. } => 4,
            CliError::Core(toa_core::Error::NonConverged { .. }) => 3,
            CliError::Core(_) => 1,
        }
    }
}
