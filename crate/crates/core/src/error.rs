use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("duplicate message id `{0}`")]
    DuplicateMessageId(String),
    #[error("invalid annotation code {0} (expected 0-7)")]
    InvalidAnnotation(i64),
    #[error("too many annotations: {0} (at most 3)")]
    TooManyAnnotations(usize),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },
    #[error("response for user `{user}` references unknown message `{message}`")]
    UnknownMessage { user: String, message: String },
    #[error("duplicate response for user `{user}` on message `{message}`")]
    DuplicateResponse { user: String, message: String },
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("training set has {vectors} vectors but {labels} labels")]
    LengthMismatch { vectors: usize, labels: usize },
    #[error("empty test set")]
    EmptyTestSet,
    #[error("need at least {needed} responses, got {got}")]
    TooFewResponses { needed: usize, got: usize },
    #[error("no message has exactly {0} responses; nothing to train a general filter on")]
    NoEligibleMessages(usize),
    #[error("statistics domain error: {0}")]
    Domain(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("infeasible assignment: {0}")]
    Infeasible(String),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
