use std::path::PathBuf;

use thiserror::Error;

use crate::solver::State;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("size mismatch: expected {expected} values, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("multiplier breaks Hermitian symmetry at mode {index:?}")]
    SymmetryViolation { index: [i64; 2] },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dyadic block {j} outside resolved range [{j_min}, {j_max}]")]
    BlockOutOfRange { j: i32, j_min: i32, j_max: i32 },

    #[error("kernel tail too heavy for the domain: {0}")]
    KernelTail(String),

    #[error("density {value} outside admissible range [{lo}, {hi}]")]
    Admissibility { value: f64, lo: f64, hi: f64 },

    #[error("run halted at t = {t}: {reason}")]
    Halted {
        t: f64,
        reason: String,
        snapshot: Box<State>,
    },

    #[error("sampling: {0}")]
    Sampling(String),

    #[error("sweep: {0}")]
    Sweep(String),

    #[error("fit: {0}")]
    Fit(String),

    #[error("config: {0}")]
    Config(String),

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
