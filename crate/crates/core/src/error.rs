//! Error type shared across the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("frequency {frequency} exceeds grid Nyquist {nyquist}; use a larger grid")]
    NyquistExceeded { frequency: f64, nyquist: f64 },

    #[error("quadrature tolerance {requested:.3e} not met (best error bound {achieved:.3e})")]
    ToleranceNotMet { requested: f64, achieved: f64, best: (f64, f64) },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("support leakage: {0}")]
    SupportLeakage(String),

    #[error("empty set: {0}")]
    EmptySet(String),

    #[error("cell size {cell:.3e} below grid resolution {resolution:.3e}")]
    CellTooSmall { cell: f64, resolution: f64 },

    #[error("scale ladder exhausted grid Nyquist after {rounds} rounds; grid too coarse for this epsilon")]
    LadderExhausted { rounds: usize, best_round: usize, best_energy: f64 },

    #[error("no corner found at grid resolution (resolution diagnostic)")]
    NoCornerFound,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
