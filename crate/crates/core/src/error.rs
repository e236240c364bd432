use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A record failed to parse or violated a field constraint.
    #[error("{file}:{line}: {field}: {message}")]
    Record {
        file: String,
        line: usize,
        field: String,
        message: String,
    },

    #[error("unknown event type(s): {}", .0.join(", "))]
    UnknownEventType(Vec<String>),

    #[error("span out of bounds in {doc_id}: ({start},{end}) with {len} tokens")]
    OutOfBounds {
        doc_id: String,
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("ontology {event_type}: {message}")]
    Ontology { event_type: String, message: String },

    #[error("prompt cluster: {0}")]
    Cluster(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("missing data: {0}")]
    Missing(String),

    #[error("non-finite loss at step {step} (batch: {batch})")]
    NonFiniteLoss { step: usize, batch: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn record(
        file: impl std::fmt::Display,
        line: usize,
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Record {
            file: file.to_string(),
            line,
            field: field.into(),
            message: message.into(),
        }
    }

    /// Machine-readable category used by the CLI for error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Record { .. } => "record",
            Error::UnknownEventType(_) => "unknown_event_type",
            Error::OutOfBounds { .. } => "out_of_bounds",
            Error::Ontology { .. } => "ontology",
            Error::Cluster(_) => "cluster",
            Error::Shape(_) => "shape",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Missing(_) => "missing",
            Error::NonFiniteLoss { .. } => "non_finite_loss",
            Error::Checkpoint(_) => "checkpoint",
        }
    }

    /// True for failures caused by input data rather than by the computation.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::NonFiniteLoss { .. } | Error::Shape(_))
    }
}
