use numkit::NumError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeanFieldError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error("degenerate covariance: {0}")]
    DegenerateCovariance(String),
    #[error("fixed point iteration did not converge in {iterations} steps (last residual {last_residual:e})")]
    NonConvergence {
        iterations: usize,
        last_residual: f64,
        residual_trace: Vec<f64>,
    },
    #[error("finite-difference step {0:e} underflows at this point")]
    StepUnderflow(f64),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("degenerate DOS operator: w == u == {0}")]
    DegenerateOperator(f64),
}

pub type Result<T> = std::result::Result<T, MeanFieldError>;
