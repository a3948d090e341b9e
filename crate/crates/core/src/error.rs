use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid scenario or constellation configuration. `key` is the dotted
    /// path of the offending entry.
    #[error("configuration error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("TLE parse error on line {line}, column {column}: {message}")]
    TleParse {
        line: u8,
        column: usize,
        message: String,
    },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    /// A function argument outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user-supplied configuration rather than by
    /// the computation itself.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::TleParse { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
