//! Deterministic numerical kernel shared by the graph model and the
//! mean-field analyzer.
//!
//! Everything here works in `f64`. Matrices are row-major and immutable once
//! handed out by value; the few in-place helpers take `&mut self` explicitly.

mod dense;
mod error;
mod gauss;
mod rng;
mod sym;

pub use dense::DenseMatrix;
pub use error::NumError;
pub use gauss::{gaussian_sample, psd_sqrt};
pub use rng::RngStream;
pub use sym::{sym_eigen, SymEigen, SymmetricMatrix};

/// Frobenius norm of a dense matrix.
pub fn frobenius_norm(m: &DenseMatrix) -> f64 {
    m.frobenius_norm()
}

pub type Result<T> = std::result::Result<T, NumError>;
