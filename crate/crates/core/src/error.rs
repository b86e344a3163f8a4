use std::path::PathBuf;

/// Errors raised by every stage of the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A file could not be parsed; `field` names the offending part.
    #[error("format error in {field}: {message}")]
    Format { field: String, message: String },

    /// An input violated an operation's preconditions.
    #[error("domain error: {0}")]
    Domain(String),

    /// A run configuration is invalid or inconsistent.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// The external predictor violated the line protocol.
    #[error("protocol error: {0}")]
    Protocol(String),
}

impl Error {
    pub(crate) fn format(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn domain(message: impl Into<String>) -> Self {
        Error::Domain(message.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 for domain/config errors, 2 for I/O, format and protocol errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Config(_) => 1,
            Error::Format { .. } | Error::Io { .. } | Error::Protocol(_) => 2,
        }
    }

    /// Wraps the error with the tile it occurred on.
    pub fn with_tile(self, tile: &str) -> Self {
        match self {
            Error::Domain(m) => Error::Domain(format!("tile {tile}: {m}")),
            Error::Protocol(m) => Error::Protocol(format!("tile {tile}: {m}")),
            Error::Format { field, message } => Error::Format {
                field,
                message: format!("tile {tile}: {message}"),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
