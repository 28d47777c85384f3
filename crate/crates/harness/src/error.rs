use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: jsdm::Error,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    pub fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(msg.into())
    }

    /// Process exit code: 2 for configuration problems, 4 for size-cap
    /// violations, 3 for numerical failures and everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Core { source, .. } if source.is_size_cap() => 4,
            HarnessError::Core { source: jsdm::Error::InvalidArgument(_), .. } => 2,
            HarnessError::Core { source: jsdm::Error::Dimacs { .. }, .. } => 2,
            HarnessError::Core { source: jsdm::Error::ReducibleFormula(_), .. } => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Attaches experiment context to core errors.
pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T>;
}

impl<T> Context<T> for jsdm::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|source| HarnessError::Core { context: what(), source })
    }
}

impl From<jsdm::Error> for HarnessError {
    fn from(source: jsdm::Error) -> Self {
        HarnessError::Core { context: "core".into(), source }
    }
}
