use std::io;

use thiserror::Error;

/// Everything that can go wrong inside the corpus factory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("window {window:?} does not fit image of extents {extents:?}")]
    WindowTooLarge {
        window: Vec<usize>,
        extents: Vec<usize>,
    },

    #[error("no usable scale: every scale was too small for the window")]
    EmptyCorpus,

    #[error("degenerate mask pair: no jointly hidden cell after {attempts} attempts")]
    DegenerateMask { attempts: u32 },

    #[error("degenerate deformation field: {0}")]
    DegenerateField(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("array format error: {0}")]
    Format(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
