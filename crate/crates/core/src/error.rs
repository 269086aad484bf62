use std::path::PathBuf;

use thiserror::Error;

/// A caller broke an operation's precondition.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("contract violation: {message}")]
pub struct ContractError {
    pub message: String,
}

impl ContractError {
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid environment: {0}")]
    Invalid(String),
    #[error("failed to read environment file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed environment document: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Contract(#[from] ContractError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error("invalid search configuration: {0}")]
    Config(String),
    #[error("layer capacity overflows the 32-bit node index at depth {depth}")]
    CapacityOverflow { depth: usize },
    #[error(
        "state branching cap {cap} exceeded under action node {action_idx} at depth {depth}; \
         raise the cap or use the clamp overflow policy"
    )]
    BranchOverflow {
        depth: usize,
        action_idx: usize,
        cap: u32,
    },
    #[error(transparent)]
    Contract(#[from] ContractError),
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("invalid benchmark configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Search(#[from] SearchError),
}
