use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    /// The requested quantity is not representable on the current discretisation.
    #[error("resolution error: {what} (hint: {hint})")]
    Resolution { what: String, hint: String },

    #[error("negative time {0} for a forward-only propagator")]
    NegativeTime(f64),

    #[error("time {t} outside the trajectory window [{start}, {end}]")]
    TimeOutOfRange { t: f64, start: f64, end: f64 },

    #[error("band limit violated: {0}")]
    BandLimit(String),

    #[error("operation requires a symmetric two-sided time grid")]
    OneSidedGrid,

    #[error("Picard iteration diverged after {iterations} iterations (last ratio {ratio:.3e}); shrink T or the data")]
    Divergence { iterations: usize, ratio: f64 },

    #[error("spectral decay certificate failed at t = {t}: tail fraction {tail:.3e} (hint: increase n_modes)")]
    DecayCertificate { t: f64, tail: f64 },

    #[error("Picard tail is not geometric: {0} (hint: raise k_max)")]
    NonGeometricTail(String),

    #[error("degenerate norm: right-hand side vanished with left-hand side {lhs:.3e} in audit {id}")]
    DegenerateRatio { id: String, lhs: f64 },

    #[error("sample violates the hypothesis of {id}: {reason}")]
    Hypothesis { id: String, reason: String },

    #[error("unsupported exponent {0}; expected 1, 2 or infinity")]
    UnsupportedExponent(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn resolution(what: impl Into<String>, hint: impl Into<String>) -> Self {
        Error::Resolution { what: what.into(), hint: hint.into() }
    }
}
