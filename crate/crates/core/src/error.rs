use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("quadrature did not converge after {subdivisions} subdivisions (estimate {estimate:e}, error {error:e})")]
    Quadrature {
        subdivisions: usize,
        estimate: f64,
        error: f64,
    },

    #[error("no root found after {iterations} iterations (residual {residual:e})")]
    NoRoot { iterations: usize, residual: f64 },

    #[error("optimizer did not converge: {0}")]
    Optimizer(String),

    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("measure is not absolutely continuous with respect to the dominating measure: {0}")]
    NotDominated(String),

    #[error("log-likelihood is -inf: {0}")]
    SupportMismatch(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
