use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed record #{ordinal} at byte {offset}: {message}")]
    MalformedRecord {
        path: PathBuf,
        ordinal: usize,
        offset: u64,
        message: String,
    },

    #[error("{path}:{line}: parse error: {message}")]
    ParseLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate doc_id {0:?}")]
    DuplicateDocId(String),

    #[error("duplicate qrels pair ({topic_id}, {doc_id})")]
    DuplicateJudgment { topic_id: String, doc_id: String },

    #[error("topic {0:?} has no title")]
    MissingTitle(String),

    #[error("query {0:?} has no terms in the index vocabulary")]
    EmptyQuery(String),

    #[error("document {0:?} has length 0: unigram model undefined")]
    UndefinedDocModel(String),

    #[error("feedback set is empty")]
    EmptyFeedbackSet,

    #[error("all query likelihoods are zero over the feedback documents")]
    DegenerateFeedback,

    #[error("parameter {name} = {value} outside valid range {range}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("vector length mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("zero-norm vector passed to cosine similarity")]
    ZeroNorm,

    #[error("no query term has an embedding vector")]
    NoQueryVector,

    #[error("no feedback term has an embedding vector")]
    NoCandidateVector,

    #[error("sampling support is empty")]
    EmptySampleSupport,

    #[error("objective diverged to a non-finite value at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("feedback term-document matrix is all zero")]
    AllZeroMatrix,

    #[error("index file {path}: {message}")]
    BadIndexFile { path: PathBuf, message: String },

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
