use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("tensor has no elements")]
    EmptyTensor,

    #[error("materialization would need {requested} elements, above the cap of {cap}")]
    SizeCap { requested: u128, cap: usize },

    #[error("{factor} Kronecker factor is singular or ill-conditioned ({detail})")]
    Singular {
        factor: &'static str,
        detail: String,
    },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("layer {index} is not supported here: {reason}")]
    UnsupportedLayer { index: usize, reason: String },

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("invalid label: {0}")]
    InvalidLabel(String),

    #[error("numeric contract violated: {0}")]
    Contract(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn dim_err(msg: impl Into<String>) -> Error {
    Error::Dimension(msg.into())
}
