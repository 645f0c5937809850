use thiserror::Error;

/// Errors raised by the coprime-array processing chain.
#[derive(Debug, Error)]
pub enum Error {
    #[error("M = {m} and N = {n} are not coprime")]
    NotCoprime { m: usize, n: usize },

    #[error("coprime pair must satisfy M < N (got M = {m}, N = {n})")]
    OrderViolation { m: usize, n: usize },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("lag {lag} outside the coarray range [-{max}, {max}]")]
    LagOutOfRange { lag: i64, max: i64 },

    #[error("adaptive quadrature did not reach tolerance {tolerance:e} (estimated error {estimate:e})")]
    QuadratureNonConvergence { tolerance: f64, estimate: f64 },

    #[error("singular value decomposition did not converge")]
    NonConvergence,

    #[error("matrix is singular even after diagonal loading")]
    SingularMatrix,

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for errors caused by bad user input rather than numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::NotCoprime { .. }
                | Error::OrderViolation { .. }
                | Error::InvalidScene(_)
                | Error::InvalidDistribution(_)
                | Error::Config { .. }
                | Error::Parse { .. }
                | Error::Io(_)
        )
    }

    pub(crate) fn shape(expected: impl ToString, got: impl ToString) -> Self {
        Error::ShapeMismatch {
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
