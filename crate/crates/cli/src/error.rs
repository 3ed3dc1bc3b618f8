use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] qpt_core::Error),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        Self::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }

    /// 2 for bad input, 3 for numerical failure, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        use qpt_core::Error as E;
        match self {
            Self::Config(_) => 2,
            Self::Io { .. } => 4,
            Self::Core(e) => match e {
                E::NotConverged { .. }
                | E::SingularProtocol(_)
                | E::NotPositive(_)
                | E::NotHermitian(_)
                | E::ZeroExpected(_)
                | E::ProbabilityOutOfRange { .. } => 3,
                _ => 2,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
