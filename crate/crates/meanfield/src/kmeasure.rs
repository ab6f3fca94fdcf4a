use numkit::SymmetricMatrix;

use crate::{MeanFieldError, Result};

/// `⟨S C S, G⟩ = Σ c_ii s_i² − (1/d)·Σ c_ij s_i s_j`.
pub fn g_inner(c: &SymmetricMatrix, s: &[f64]) -> f64 {
    let d = c.dim();
    assert_eq!(s.len(), d, "scaling vector length");
    let mut diag = 0.0;
    let mut all = 0.0;
    for i in 0..d {
        diag += c.get(i, i) * (s[i] * s[i]);
        for j in 0..d {
            all += c.get(i, j) * (s[i] * s[j]);
        }
    }
    diag - all / d as f64
}

/// How much the reweighting `s` amplifies the G-component of `C`, relative
/// to the mean squared scale. Equals 1 exactly for `s = 𝟙`.
pub fn k_measure(c: &SymmetricMatrix, s: &[f64]) -> Result<f64> {
    let d = c.dim();
    if s.len() != d {
        return Err(MeanFieldError::InvalidConfig(format!(
            "scaling vector has length {}, expected {d}",
            s.len()
        )));
    }
    let ones = vec![1.0; d];
    let num = g_inner(c, s);
    let base = g_inner(c, &ones);
    let mean_sq = s.iter().map(|x| x * x).sum::<f64>() / d as f64;
    let scale: f64 = c.data().iter().map(|x| x.abs()).sum();
    if !(base.abs() > 1e-14 * scale) || mean_sq == 0.0 {
        return Err(MeanFieldError::DegenerateCovariance(
            "⟨C, G⟩ vanishes: C has no G-component".into(),
        ));
    }
    Ok(num / (base * mean_sq))
}

/// `S C S`.
pub fn reweighted_covariance(c: &SymmetricMatrix, s: &[f64]) -> SymmetricMatrix {
    c.diag_conjugate(s)
}
