use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty corpus")]
    EmptyCorpus,

    #[error("invalid proportion: {0}")]
    InvalidProportion(String),

    #[error("vocabulary too small: need at least 2 tokens, got {0}")]
    VocabularyTooSmall(usize),

    #[error("invalid count for token {token:?}: {reason}")]
    InvalidCount { token: String, reason: String },

    #[error("duplicate token {0:?}")]
    DuplicateToken(String),

    #[error("missing embeddings for tokens: {}", .0.join(", "))]
    MissingTokens(Vec<String>),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in embedding for token {0:?}")]
    NonFinite(String),

    #[error("empty embedding matrix")]
    EmptyEmbeddings,

    #[error("token {0:?} is absent from every language")]
    TokenAbsent(String),

    #[error("malformed tree: {0}")]
    MalformedTree(String),

    #[error("invalid clustering spec {given:?}; valid specs: {}", .valid.join(", "))]
    InvalidSpec { given: String, valid: Vec<String> },

    #[error("degenerate split of a cluster with {0} members")]
    DegenerateSplit(usize),

    #[error("unknown token {0}")]
    UnknownToken(usize),

    #[error("out-of-vocabulary character {0:?}")]
    OutOfVocabulary(char),

    #[error("no lexicon pair could be evaluated ({0} skipped)")]
    AllSkipped(usize),

    #[error("empty reference")]
    EmptyReference,

    #[error("empty lexicon")]
    EmptyLexicon,

    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
