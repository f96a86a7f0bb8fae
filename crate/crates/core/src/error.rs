use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value in `{term}` of the cavity equations")]
    NonFinite { term: &'static str },

    #[error("integration failed at t = {time_s:e} s: {source}")]
    Integration {
        time_s: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("negative optical power {value:e} requested at sample {index}")]
    NegativePower { index: usize, value: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("singular ridge system (lambda = {lambda:e}); use a strictly positive regularization")]
    Singular { lambda: f64 },

    #[error("target has zero variance")]
    ZeroVariance,

    #[error("unsupported polynomial order {0} (expected 1, 2 or 3)")]
    UnsupportedOrder(usize),

    #[error("dataset {path}: {reason}")]
    Dataset { path: PathBuf, reason: String },

    #[error("config: {0}")]
    Config(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
