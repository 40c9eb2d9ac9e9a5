use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no label for document `{0}`")]
    MissingLabel(String),

    #[error("invalid label for document `{id}`: {value}")]
    InvalidLabel { id: String, value: f64 },

    #[error(
        "label for document `{id}` is {value} months, outside the assault-domain range [0, 174]"
    )]
    LabelOutOfRange { id: String, value: f64 },

    #[error("duplicate document id `{0}`")]
    DuplicateId(String),

    #[error("document `{0}` is empty")]
    EmptyDocument(String),

    #[error("document `{0}` is empty after cleaning")]
    EmptyAfterCleaning(String),

    #[error("corpus has {got} documents, at least {min} are required")]
    CorpusTooSmall { got: usize, min: usize },

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("no terms survived document-frequency pruning")]
    EmptyVocabulary,

    #[error("invalid n-gram range {min}..={max}")]
    InvalidNgramRange { min: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid training config: {0}")]
    InvalidConfig(String),

    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("unsupported model format version {0}")]
    UnsupportedFormat(u32),

    #[error("malformed model file: {0}")]
    MalformedModel(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusErrors),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
