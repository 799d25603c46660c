use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::ingest::Checkpoint;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised while validating identifiers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("invalid {kind} {input:?}: expected {expected} characters including 0x prefix, got {actual}")]
    Length {
        kind: &'static str,
        input: String,
        expected: usize,
        actual: usize,
    },
    #[error("invalid {kind} {input:?}: non-hexadecimal character {ch:?}")]
    NonHex {
        kind: &'static str,
        input: String,
        ch: char,
    },
    #[error("tag label for {0} is empty")]
    EmptyLabel(String),
    #[error("unknown tag kind {0:?} (expected contract, user or unknown)")]
    TagKind(String),
}

/// A single bad record in an input file.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct RecordError {
    pub line: usize,
    pub reason: String,
}

impl RecordError {
    pub fn new(line: usize, reason: impl Into<String>) -> Self {
        Self {
            line,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("authentication rejected by {endpoint}: {message}")]
    Auth { endpoint: String, message: String },
    /// Retries were exhausted; the run can be resumed from `checkpoint`.
    #[error("transport failure after {attempts} attempts ({message}); resume from block {}", .checkpoint.as_ref().map(|c| c.last_completed_block + 1).map_or_else(|| "start".to_string(), |b| b.to_string()))]
    Resumable {
        attempts: u32,
        message: String,
        checkpoint: Option<Checkpoint>,
    },
    #[error("unexpected response from {endpoint}: {message}")]
    Protocol { endpoint: String, message: String },
    #[error("empty or inverted block range {0}..={1}")]
    Range(u64, u64),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("{path}: {source}")]
    Record {
        path: String,
        #[source]
        source: RecordError,
    },
    #[error(transparent)]
    Fetch(#[from] FetchError),
    #[error("configuration: {0}")]
    Config(String),
    #[error("degree tables use different metrics ({0} vs {1})")]
    MetricMismatch(String, String),
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
