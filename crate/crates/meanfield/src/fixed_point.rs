use numkit::SymmetricMatrix;
use serde::{Deserialize, Serialize};

use crate::map::cov_map_step;
use crate::{MeanFieldConfig, MeanFieldError, Result};

/// A fixed point `q*·((1 - c*)·I + c*·𝟙𝟙ᵀ)` of the covariance map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bsb1Point {
    pub q: f64,
    pub c: f64,
    pub matrix: SymmetricMatrix,
    pub residual: f64,
    pub iterations: usize,
}

pub fn bsb1_matrix(d: usize, q: f64, c: f64) -> SymmetricMatrix {
    SymmetricMatrix::from_upper(d, |i, j| if i == j { q } else { q * c })
}

/// Iterates the map restricted to the two-parameter BSB1 family until the
/// full-space residual `‖F(C) − C‖_F` drops below `tol`.
pub fn find_bsb1_fixed_point(cfg: &MeanFieldConfig, tol: f64, max_iter: usize) -> Result<Bsb1Point> {
    cfg.validate()?;
    if cfg.sigma_b2 == 0.0 {
        return Err(MeanFieldError::DegenerateCovariance(
            "zero bias variance: the map contracts to the zero matrix".into(),
        ));
    }
    if cfg.s.iter().any(|&x| x != cfg.s[0]) {
        return Err(MeanFieldError::NotApplicable(
            "non-uniform scaling breaks permutation symmetry; no BSB1 fixed point".into(),
        ));
    }
    let d = cfg.d;
    let (mut q, mut c) = (1.0, 0.0);
    let mut trace = Vec::new();
    for it in 1..=max_iter {
        let cur = bsb1_matrix(d, q, c);
        let next = cov_map_step(cfg, &cur)?;
        let residual = next.sub(&cur).frobenius_norm();
        trace.push(residual);
        if residual < tol {
            return Ok(Bsb1Point {
                q,
                c,
                matrix: cur,
                residual,
                iterations: it,
            });
        }
        let nq = next.trace() / d as f64;
        let off = (next.sum() - next.trace()) / (d * (d - 1)) as f64;
        q = nq;
        c = off / nq;
    }
    Err(MeanFieldError::NonConvergence {
        iterations: max_iter,
        last_residual: *trace.last().unwrap_or(&f64::NAN),
        residual_trace: trace,
    })
}

/// Iterates the unrestricted map from `start`; used to cross-check that
/// generic starting points reach the same fixed point.
pub fn iterate_full_map(
    cfg: &MeanFieldConfig,
    start: &SymmetricMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<(SymmetricMatrix, usize)> {
    let mut cur = start.clone();
    let mut trace = Vec::new();
    for it in 1..=max_iter {
        let next = cov_map_step(cfg, &cur)?;
        let residual = next.sub(&cur).frobenius_norm();
        trace.push(residual);
        cur = next;
        if residual < tol {
            return Ok((cur, it));
        }
    }
    Err(MeanFieldError::NonConvergence {
        iterations: max_iter,
        last_residual: *trace.last().unwrap_or(&f64::NAN),
        residual_trace: trace,
    })
}
