use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("segment count mismatch: hypothesis has {hyp} segments, reference {reference} has {found}")]
    SegmentMismatch {
        hyp: usize,
        reference: usize,
        found: usize,
    },

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("unrated session: no clicks")]
    UnratedSession,

    #[error("illegal metric variant {0}")]
    IllegalVariant(String),

    #[error("external scorer `{scorer}` failed: {message}")]
    Scorer { scorer: String, message: String },

    #[error("external scorer `{scorer}` returned no score for ids: {}", missing.join(", "))]
    MissingScores { scorer: String, missing: Vec<String> },

    #[error("one-pass rule: evaluator `{evaluator}` already fetched document `{doc_id}`")]
    OnePassViolation { evaluator: String, doc_id: String },

    #[error("evaluator `{evaluator}` has no assignment for document `{doc_id}`")]
    NotAssigned { evaluator: String, doc_id: String },

    #[error("{stage}: {inner}")]
    Stage {
        stage: &'static str,
        inner: Box<Error>,
    },

    #[error("no data: {0}")]
    Empty(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
