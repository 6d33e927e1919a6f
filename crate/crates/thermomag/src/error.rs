use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("no samples in input")]
    NoSamples,

    #[error("non-monotone timestamp at sample index {index}")]
    NonMonotoneTime { index: usize },

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("time step {dt} s too large; integration requires dt <= {limit} s")]
    DtTooLarge { dt: f64, limit: f64 },

    #[error("no step detected in trace")]
    NoStepDetected,

    #[error("multiple steps detected in trace ({count})")]
    MultipleSteps { count: usize },

    #[error("fit did not converge; best residual {residual}")]
    NonConvergence { residual: f64 },

    #[error("no sustained oscillation found below gain {gain_cap}")]
    NoOscillation { gain_cap: f64 },

    #[error("invalid filter window: window {window} must be odd and larger than order {order} >= 1")]
    FilterWindow { window: usize, order: usize },

    #[error("malformed generator: polarisation left [-1, 1] by {excess}")]
    MalformedGenerator { excess: f64 },

    #[error("invalid parameter {name}: {msg}")]
    InvalidParameter { name: &'static str, msg: String },

    #[error("scenario validation failed: {0}")]
    Validation(String),

    #[error("incompatible experiment kinds: {a} vs {b}")]
    IncompatibleKinds { a: String, b: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
