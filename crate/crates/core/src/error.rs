use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("level must be at least 2, got {0}")]
    InvalidLevel(usize),

    #[error("digit {digit} out of range for level {level}")]
    DigitOutOfRange { digit: usize, level: usize },

    #[error("qudit index {target} out of range for a {qudits}-qudit register")]
    TargetOutOfRange { target: usize, qudits: usize },

    #[error("register of {qudits} qudits at level {level} exceeds the cap of {cap} amplitudes")]
    DimensionCap {
        level: usize,
        qudits: usize,
        cap: usize,
    },

    #[error("amplitude vector has squared norm {0}, expected 1")]
    NotNormalized(f64),

    #[error("register shape mismatch: ({0}, {1}) vs ({2}, {3})")]
    ShapeMismatch(usize, usize, usize, usize),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("qudit {qudit} of round {round} was already measured")]
    AlreadyMeasured { round: usize, qudit: usize },

    #[error("check position {0} was already consumed")]
    CheckPositionReused(usize),

    #[error("protocol aborted: decoy error rate {rate} exceeds threshold {threshold}")]
    Aborted { rate: f64, threshold: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("malformed report: {0}")]
    Report(#[from] serde_json::Error),
}
