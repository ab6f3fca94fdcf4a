//! Mean-field covariance dynamics of wide ReLU layers, with and without a
//! per-dimension reweighting `S = diag(s)`.
//!
//! The state is the pre-activation covariance `C ∈ H_d`; one layer maps it to
//! `V_φ(S C S) + σ_b² I`.

mod config;
pub mod decompose;
pub mod dos;
mod error;
pub mod fixed_point;
pub mod growth;
pub mod kernel;
pub mod kmeasure;
pub mod map;
pub mod operator;
pub mod random;
pub mod search;
pub mod spectral;

pub use config::{Activation, MeanFieldConfig};
pub use decompose::{orthogonal_decompose, Decomposition};
pub use dos::{dos_apply, dos_eigencheck, DosEigenReport, DosOperator};
pub use error::{MeanFieldError, Result};
pub use fixed_point::{bsb1_matrix, find_bsb1_fixed_point, iterate_full_map, Bsb1Point};
pub use growth::{initial_g_ratio, theorem2_growth, GrowthTrace};
pub use kernel::{relu_pair, v_dphi, v_phi, v_phi_closed, v_phi_mc, MonteCarloEstimate};
pub use kmeasure::{g_inner, k_measure, reweighted_covariance};
pub use map::cov_map_step;
pub use operator::{jacobian_fd, jacobian_fd_richardson, linearity_residual, SymmetricOperator};
pub use random::wishart;
pub use search::{theorem1_search, ScalingSearch};
pub use spectral::{theorem3_verify, SpectralReport, SubspaceReport};
