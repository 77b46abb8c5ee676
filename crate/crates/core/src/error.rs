use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("token id {id} is outside the vocabulary (size {size})")]
    UnknownTokenId { id: usize, size: usize },

    #[error("token {0:?} is not in the vocabulary")]
    UnknownToken(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// Importance needs at least one earlier position to attend to.
    #[error("importance is undefined for a row with no predecessor")]
    UndefinedImportance,

    #[error("AUROC is undefined: need at least one correct and one incorrect record")]
    UndefinedAuroc,

    #[error("{}: record {record}: {message}", path.display())]
    Parse {
        path: PathBuf,
        record: String,
        message: String,
    },

    #[error("{}: {message}", path.display())]
    Validation { path: PathBuf, message: String },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("while scoring path {path:?}: {source}")]
    Path {
        path: Vec<usize>,
        #[source]
        source: Box<Error>,
    },

    #[error("problem {problem}: {source}")]
    Problem {
        problem: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn in_problem(self, problem: &str) -> Self {
        Error::Problem {
            problem: problem.to_string(),
            source: Box::new(self),
        }
    }
}
