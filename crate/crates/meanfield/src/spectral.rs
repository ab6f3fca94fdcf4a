use numkit::SymmetricMatrix;
use serde::{Deserialize, Serialize};

use crate::decompose::{orthogonal_decompose, subspace_dims, Decomposition};
use crate::map::cov_map_step;
use crate::operator::{jacobian_fd, smat, svec, svec_len, SymmetricOperator};
use crate::{MeanFieldConfig, MeanFieldError, Result};

/// How `J` acts on one subspace, measured on an orthonormal basis `{q}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubspaceReport {
    pub dim: usize,
    /// Mean Rayleigh quotient `⟨J q, q⟩`.
    pub eigenvalue: Option<f64>,
    /// `max ‖G·J(q)·G − λ q‖_F`: invariance and eigenvalue, modulo `V_0`.
    pub residual: f64,
    /// `max ‖J(q) − λ q‖_F` without discarding the `V_0` part.
    pub literal_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralReport {
    pub d: usize,
    pub sigma_b2: f64,
    pub fixed_point: SymmetricMatrix,
    pub fd_step: f64,
    /// `max ‖J(q)‖_F` over an orthonormal basis of `V_0`.
    pub kernel_residual: f64,
    pub g: SubspaceReport,
    pub l: SubspaceReport,
    pub m: SubspaceReport,
    pub dims_sum: usize,
    pub tolerance: f64,
    pub passed: bool,
    pub failures: Vec<String>,
}

impl SpectralReport {
    pub fn lambda_g(&self) -> f64 {
        self.g.eigenvalue.unwrap_or(f64::NAN)
    }
}

/// Gram-Schmidt with re-orthogonalization. Vectors whose remainder is tiny
/// relative to the longest input are dropped.
pub fn orthonormalize(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let scale = vectors
        .iter()
        .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let dot: f64 = q.iter().zip(&w).map(|(a, b)| a * b).sum();
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= dot * y);
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 * scale {
            w.iter_mut().for_each(|x| *x /= norm);
            out.push(w);
        }
    }
    out
}

/// Orthonormal bases (svec coordinates) of `V_0`, `ℝG`, `V_L`, `V_M`.
pub fn subspace_bases(d: usize) -> [Vec<Vec<f64>>; 4] {
    let parts: Vec<Decomposition> = (0..svec_len(d))
        .map(|k| orthogonal_decompose(&crate::operator::basis(d, k)))
        .collect();
    let pick = |f: fn(&Decomposition) -> &SymmetricMatrix| {
        orthonormalize(&parts.iter().map(|p| svec(f(p))).collect::<Vec<_>>())
    };
    [pick(|p| &p.c0), pick(|p| &p.cg), pick(|p| &p.cl), pick(|p| &p.cm)]
}

fn subspace_report(jac: &SymmetricOperator, basis: &[Vec<f64>], g: &SymmetricMatrix) -> SubspaceReport {
    let d = jac.dim();
    if basis.is_empty() {
        return SubspaceReport {
            dim: 0,
            eigenvalue: None,
            residual: 0.0,
            literal_residual: 0.0,
        };
    }
    let images: Vec<Vec<f64>> = basis.iter().map(|q| jac.apply_svec(q)).collect();
    let lambda = basis
        .iter()
        .zip(&images)
        .map(|(q, y)| q.iter().zip(y).map(|(a, b)| a * b).sum::<f64>())
        .sum::<f64>()
        / basis.len() as f64;
    let mut residual: f64 = 0.0;
    let mut literal: f64 = 0.0;
    for (q, y) in basis.iter().zip(&images) {
        let qm = smat(d, q).scale(lambda);
        let ym = smat(d, y);
        literal = literal.max(ym.sub(&qm).frobenius_norm());
        residual = residual.max(ym.sandwich(g).sub(&qm).frobenius_norm());
    }
    SubspaceReport {
        dim: basis.len(),
        eigenvalue: Some(lambda),
        residual,
        literal_residual: literal,
    }
}

/// Linearizes the normalized map at its BSB1 fixed point and measures how it
/// acts on each subspace. Passing requires `λ_G > 1`, `|λ_L|, |λ_M| < 1` and
/// all residuals below `tolerance`.
pub fn theorem3_verify(
    cfg: &MeanFieldConfig,
    fixed_point: &SymmetricMatrix,
    fd_step: f64,
    tolerance: f64,
) -> Result<SpectralReport> {
    cfg.validate()?;
    if !cfg.normalized {
        return Err(MeanFieldError::NotApplicable(
            "spectral decomposition is defined for the normalized map".into(),
        ));
    }
    if !cfg.has_identity_scaling() {
        return Err(MeanFieldError::NotApplicable("spectral decomposition needs S = I".into()));
    }
    let d = cfg.d;
    if d < 3 {
        return Err(MeanFieldError::InvalidConfig("spectral decomposition needs d >= 3".into()));
    }
    let jac = jacobian_fd(|c| cov_map_step(cfg, c), fixed_point, fd_step)?;
    let g = SymmetricMatrix::centering(d);
    let [b0, bg, bl, bm] = subspace_bases(d);
    let kernel_residual = b0
        .iter()
        .map(|q| jac.apply_svec(q).iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let gr = subspace_report(&jac, &bg, &g);
    let lr = subspace_report(&jac, &bl, &g);
    let mr = subspace_report(&jac, &bm, &g);
    let (e0, eg, el, em) = subspace_dims(d);
    let dims_sum = b0.len() + bg.len() + bl.len() + bm.len();

    let mut failures = Vec::new();
    if (b0.len(), bg.len(), bl.len(), bm.len()) != (e0, eg, el, em) || dims_sum != svec_len(d) {
        failures.push(format!("subspace dimensions {dims_sum} do not sum to {}", svec_len(d)));
    }
    if kernel_residual >= tolerance {
        failures.push(format!("V_0 is not annihilated: residual {kernel_residual:e}"));
    }
    for (name, r) in [("G", &gr), ("L", &lr), ("M", &mr)] {
        if r.residual >= tolerance {
            failures.push(format!("V_{name} invariance residual {:e}", r.residual));
        }
    }
    let lg = gr.eigenvalue.unwrap_or(f64::NAN);
    if !(lg > 1.0) {
        failures.push(format!("lambda_G = {lg:.6e} is not > 1"));
    }
    for (name, r) in [("L", &lr), ("M", &mr)] {
        if let Some(l) = r.eigenvalue {
            if !(l.abs() < 1.0) {
                failures.push(format!("|lambda_{name}| = {:.6} is not < 1", l.abs()));
            }
        }
    }
    Ok(SpectralReport {
        d,
        sigma_b2: cfg.sigma_b2,
        fixed_point: fixed_point.clone(),
        fd_step,
        kernel_residual,
        g: gr,
        l: lr,
        m: mr,
        dims_sum,
        tolerance,
        passed: failures.is_empty(),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bases_have_expected_dimensions() {
        for d in 2..7 {
            let [a, b, c, m] = subspace_bases(d);
            assert_eq!((a.len(), b.len(), c.len(), m.len()), subspace_dims(d), "d = {d}");
        }
    }

    #[test]
    fn requires_normalized_map() {
        let cfg = MeanFieldConfig::new(4, 1.0).unwrap();
        assert!(matches!(
            theorem3_verify(&cfg, &SymmetricMatrix::identity(4), 1e-5, 1e-5),
            Err(MeanFieldError::NotApplicable(_))
        ));
    }
}
