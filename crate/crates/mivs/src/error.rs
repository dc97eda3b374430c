use std::path::PathBuf;

use mivs_core::Error as CoreError;

/// Process exit codes.
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Data(_) | CliError::Io { .. } => EXIT_DATA,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        use CoreError::*;
        let msg = e.to_string();
        if e.is_numerical() {
            return CliError::Numerical(msg);
        }
        match e {
            ShapeMismatch { .. }
            | LabelMismatch { .. }
            | NonFinite { .. }
            | NonFiniteTarget { .. }
            | Empty
            | RowOutOfRange { .. }
            | InvalidSplit(_)
            | DegenerateRow { .. }
            | DegenerateColumn { .. }
            | TooFewVariables(_) => CliError::Data(msg),
            _ => CliError::Config(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
