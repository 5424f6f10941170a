use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for {what} (len {len})")]
    IndexOutOfRange { what: &'static str, index: usize, len: usize },

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("truncation error: tail weight {tail:e} exceeds bound {bound:e}")]
    Truncation { tail: f64, bound: f64 },

    #[error("mismatched photon cutoffs {0} and {1}")]
    CutoffMismatch(usize, usize),

    #[error("degenerate couplings: {0}")]
    DegenerateCouplings(&'static str),

    #[error("negative loss rate {gamma} on mode {mode}")]
    NegativeLoss { mode: usize, gamma: f64 },

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("invalid integration window: {0}")]
    InvalidWindow(String),

    #[error("step size underflow at t = {t:e} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("norm drift {drift:e} at t = {t:e} in lossless evolution")]
    NormDrift { t: f64, drift: f64 },

    #[error("initial state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("unknown basis label `{0}`")]
    UnknownLabel(String),

    #[error("measurement basis is not orthonormal (max Gram deviation {0:e})")]
    NonOrthonormal(f64),

    #[error("measurement basis has {vectors} vectors for {levels} levels")]
    IncompleteBasis { vectors: usize, levels: usize },

    #[error("atom basis vector is not normalized or has weight on the excited level")]
    InvalidAtomVector,

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid parameter path `{0}`")]
    InvalidAxis(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures that originate in the numerics rather than the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::StepSizeUnderflow { .. }
                | Error::NormDrift { .. }
                | Error::Truncation { .. }
                | Error::DegenerateCouplings(_)
        )
    }

    /// Wraps an I/O failure with the path it concerns.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
