use thiserror::Error;

/// Errors produced by the signal model, the solvers and the campaign harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("PAPR is undefined for an all-zero signal")]
    ZeroSignal,

    #[error("support violation at subcarrier {index}: |value| = {magnitude:e}")]
    Support { index: usize, magnitude: f64 },

    #[error("solver failed ({status}): {context}")]
    Solver { status: String, context: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("config parse error in {path}: {message}")]
    Parse { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
