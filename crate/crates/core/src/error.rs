use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: unknown id {id:?}")]
    DanglingReference { path: PathBuf, line: usize, id: String },

    #[error("duplicate id {0:?}")]
    DuplicateId(String),

    #[error("duplicate hierarchy pair ({0}, {1})")]
    DuplicatePair(String, String),

    #[error("hierarchy contains a cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),

    #[error("unknown term id {0:?}")]
    UnknownTerm(String),

    #[error("unknown entity id {0:?}")]
    UnknownEntity(String),

    #[error("one-to-one violation: {0}")]
    OneToOne(String),

    #[error("invalid value: {0}")]
    Invalid(String),

    #[error("prompt does not fit a budget of {budget} words even with {candidates} candidates ({words} words)")]
    BudgetExceeded {
        budget: usize,
        candidates: usize,
        words: usize,
    },

    #[error(transparent)]
    Backend(#[from] crate::llm::LlmError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line driver: 2 for data validation
    /// problems, 3 for completion backend failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Backend(_) => 3,
            Error::Invalid(_) => 1,
            _ => 2,
        }
    }
}
