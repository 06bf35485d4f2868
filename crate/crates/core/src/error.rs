use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the hashing pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes, sizes or hyperparameters that do not fit together.
    #[error("configuration error: {0}")]
    Config(String),

    /// Bad argument value for an operation (empty input, alpha out of range, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A file did not follow its binary or text layout.
    #[error("format error in {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    /// A model was used with a regime it was not trained for.
    #[error("regime mismatch: {0}")]
    Regime(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }
}

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err($crate::error::Error::$variant(format!($($fmt)+)));
        }
    };
}
pub(crate) use ensure;
