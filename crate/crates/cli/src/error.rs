use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("could not parse config: {0}")]
    Parse(String),

    #[error("`{key}`: {reason}")]
    Invalid { key: String, reason: String },

    #[error("bound certificate failed for leaders[{family}]: {failures}")]
    Certificate { family: usize, failures: String },

    #[error("oracle mismatch: {0}")]
    OracleMismatch(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Csv(#[from] csv::Error),

    #[error("simulation failed: {0}")]
    Runtime(#[from] opinion_kinetics::Error),
}

impl CliError {
    pub(crate) fn invalid(key: impl Into<String>, reason: impl ToString) -> Self {
        CliError::Invalid {
            key: key.into(),
            reason: reason.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    /// 1 validation or certificate failure (and failed oracle comparison),
    /// 2 runtime or I/O failure, 3 refusal outside an oracle's domain.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Invalid { .. } | CliError::Certificate { .. } | CliError::OracleMismatch(_) => 1,
            CliError::Io { .. } | CliError::Csv(_) | CliError::Runtime(_) => 2,
            CliError::Refused(_) => 3,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
