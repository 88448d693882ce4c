use thiserror::Error;

use rydberg_core::Error as CoreError;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad or incomplete configuration, reported against the offending field.
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("cannot read input: {0}")]
    Input(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    /// The fit ran but did not converge; the report is still written.
    #[error("fit did not converge after {iterations} iterations")]
    FitNotConverged { iterations: usize },

    /// Some sweep points failed; the rest were written.
    #[error("{failed} of {total} sweep points failed")]
    SweepFailures { failed: usize, total: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config { field: field.into(), message: message.into() }
    }

    /// 0 success, 2 configuration, 3 numeric failure, 4 no EP or failed fit.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Input(_) | CliError::Io(_) => 2,
            CliError::FitNotConverged { .. } => 4,
            CliError::SweepFailures { .. } => 3,
            CliError::Core(e) => match e {
                CoreError::EigenNoConvergence { .. } | CoreError::Unstable { .. } | CoreError::Positivity { .. } => 3,
                CoreError::NoExceptionalPoint { .. } | CoreError::NoThreshold { .. } => 4,
                _ => 2,
            },
        }
    }
}
