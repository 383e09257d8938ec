use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Input could not be parsed; `location` names the line/field.
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    /// A domain rule (instance invariant, config range, ...) is violated.
    #[error("validation error: {0}")]
    Validation(String),

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The fitness-evaluation budget is spent; engines use this to stop.
    #[error("evaluation budget of {budget} FFE exhausted")]
    BudgetExhausted { budget: u64 },

    /// An archive does not cover every compared (instance, optimizer) cell.
    #[error("coverage error: {0}")]
    Coverage(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Process exit code used by the CLI: 1 for validation-type failures,
    /// 2 for coverage and I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::Validation(_)
            | Error::Contract(_)
            | Error::BudgetExhausted { .. } => 1,
            Error::Coverage(_) | Error::Io { .. } | Error::Json(_) => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
