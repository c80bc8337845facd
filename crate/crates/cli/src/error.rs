use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] pbmin_core::Error),

    #[error("model file: {0}")]
    Model(String),
}

impl CliError {
    pub fn data(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Self::Data { path: path.into(), message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// 1 usage, 2 data, 3 numeric domain.
    pub fn exit_code(&self) -> i32 {
        use pbmin_core::Error as E;
        match self {
            Self::Usage(_) => 1,
            Self::Data { .. } | Self::Io { .. } | Self::Model(_) => 2,
            Self::Core(E::Domain(_) | E::Precondition(_)) => 3,
            Self::Core(_) => 2,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
