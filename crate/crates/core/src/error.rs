use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("operation undefined at zero frequency; use the zero-mode path")]
    SingularFrequency,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("incompatible boundary data: mean {mean:.3e} should vanish")]
    Compatibility { mean: f64 },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("truncated field file: record {record} of {expected} is missing")]
    Truncated { record: usize, expected: usize },
    #[error("field file structure: {0}")]
    Structure(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
