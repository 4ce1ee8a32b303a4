use thiserror::Error;

/// Errors raised by the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("no sign change of f on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("root finder did not converge within {iterations} iterations")]
    MaxIter { iterations: usize },

    #[error("zero pivot in tridiagonal elimination at row {row}")]
    SingularPivot { row: usize },

    #[error("PSOR did not converge within {iterations} iterations (residual {residual:.3e})")]
    MaxIterExceeded {
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    #[error("intensity specification is not constant")]
    NotConstantIntensity,

    #[error(
        "purchase timing is trivial: market intensity {lambda_market} is not below buyer intensity {lambda_buyer}"
    )]
    WrongOrdering { lambda_market: f64, lambda_buyer: f64 },

    #[error("invalid switch policy: {0}")]
    InvalidPolicy(String),

    #[error("rolling window is empty: [{start}, {end}]")]
    WindowEmpty { start: f64, end: f64 },

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
