use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PfdeError {
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("unknown reaction catalog id `{0}`")]
    UnknownCatalog(String),

    #[error("malformed coefficient table: {0}")]
    MalformedCoefficients(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("numerical blowup at t = {time} (last valid time {last_valid_time})")]
    NumericalBlowup { time: f64, last_valid_time: f64 },

    #[error("time {0} is not available in the trajectory")]
    TimeNotAvailable(f64),

    #[error("time {0} is not on the solver grid")]
    OffGrid(f64),

    #[error("trajectory window too short: need {needed} steps, have {available}")]
    WindowTooShort { needed: usize, available: usize },

    #[error("linearized solution collapsed below 1e-300 at t = {time}")]
    Degenerate { time: f64 },

    #[error("Newton iteration did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("missing spectrum for block {0}")]
    MissingSpectrum(usize),

    #[error("persistence witness failed: {0}")]
    FailedWitness(String),

    #[error("zero section is not invariant: f(w, x, 0, 0) = {value} at x = {x}")]
    ZeroSectionNotInvariant { x: f64, value: f64 },

    #[error("io error: {0}")]
    Io(String),
}

impl PfdeError {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        PfdeError::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for PfdeError {
    fn from(e: std::io::Error) -> Self {
        PfdeError::Io(e.to_string())
    }
}

pub type Result<T, E = PfdeError> = std::result::Result<T, E>;
