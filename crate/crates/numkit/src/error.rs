use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },
    #[error("matrix is not symmetric: |m[{i}][{j}] - m[{j}][{i}]| = {diff}")]
    NotSymmetric { i: usize, j: usize, diff: f64 },
    #[error("covariance is indefinite: smallest eigenvalue {min_eigenvalue}")]
    InvalidCovariance { min_eigenvalue: f64 },
}
