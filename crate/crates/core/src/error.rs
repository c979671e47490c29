use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chain spec: {0}")]
    InvalidSpec(String),

    #[error("spin value {value} out of range 1..={m}")]
    SpinOutOfRange { value: usize, m: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("{what}: size {size} exceeds cap {cap}{hint}")]
    SizeLimit {
        what: &'static str,
        size: String,
        cap: String,
        hint: &'static str,
    },

    #[error("sigma must be positive, got {0}")]
    NonPositiveSigma(f64),

    #[error("omega must be unimodular, got |omega| = {0}")]
    NotUnimodular(f64),

    #[error("{what} did not converge (residual {residual:e})")]
    NoConvergence { what: &'static str, residual: f64 },

    #[error("need at least {need} distinct levels, got {got}")]
    TooFewLevels { need: usize, got: usize },

    #[error("unfolded spectrum is degenerate (all levels coincide)")]
    DegenerateSpectrum,

    #[error("density table is empty")]
    EmptyDensity,

    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    #[error("internal inconsistency: {0}")]
    Inconsistent(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn size_limit(
        what: &'static str,
        size: impl ToString,
        cap: impl ToString,
        hint: &'static str,
    ) -> Self {
        Error::SizeLimit {
            what,
            size: size.to_string(),
            cap: cap.to_string(),
            hint,
        }
    }
}
