use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the wavepacket library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate lattice: generator determinant {det:e}")]
    DegenerateLattice { det: f64 },

    #[error("degenerate corrector placement: {reason}")]
    DegenerateCorrectors { reason: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("gamma radius {radius} too small for the tail condition; need at least {required}")]
    TailCondition { radius: f64, required: f64 },

    #[error("fit needs at least {needed} usable points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("cutoff too large: eps * star-norm = {lhs} >= A = {a}")]
    CutoffTooLarge { lhs: f64, a: f64 },

    #[error("symbol vanishes on the grid (min {min:e})")]
    VanishingSymbol { min: f64 },

    #[error("no packet centers fall inside the domain")]
    EmptyIndexSet,

    #[error("format error at byte offset {offset}: {reason}")]
    Format { offset: usize, reason: String },

    #[error("parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
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

pub type Result<T> = std::result::Result<T, Error>;
