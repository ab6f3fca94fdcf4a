use std::f64::consts::PI;

use numkit::{psd_sqrt, sym_eigen, RngStream, SymmetricMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{MeanFieldConfig, MeanFieldError, Result};

/// `E[relu(x) relu(y)]` for a centered pair with variances `a`, `b` and
/// covariance `c`.
pub fn relu_pair(a: f64, b: f64, c: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        return 0.0;
    }
    let norm = (a * b).sqrt();
    let rho = (c / norm).clamp(-1.0, 1.0);
    norm / (2.0 * PI) * ((1.0 - rho * rho).sqrt() + (PI - rho.acos()) * rho)
}

/// Arc-cosine kernel of a covariance matrix: entrywise [`relu_pair`].
pub fn relu_kernel(c: &SymmetricMatrix) -> SymmetricMatrix {
    SymmetricMatrix::from_upper(c.dim(), |i, j| {
        if i == j {
            c.get(i, i).max(0.0) / 2.0
        } else {
            relu_pair(c.get(i, i), c.get(j, j), c.get(i, j))
        }
    })
}

/// `V_φ(S C S)` for ReLU in closed form. Zero-variance coordinates give zero
/// rows; correlations are clamped to `[-1, 1]`.
pub fn v_phi_closed(cfg: &MeanFieldConfig, c: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    check_input(cfg, c)?;
    if cfg.normalized {
        return Err(MeanFieldError::NotApplicable(
            "closed form exists only for the plain activation; use v_dphi".into(),
        ));
    }
    Ok(relu_kernel(&c.diag_conjugate(&cfg.s)))
}

const QUAD_STEP: f64 = 0.125;
const QUAD_HEAD: f64 = 40.0;
const QUAD_TAIL: f64 = 80.0;

/// `V_{dφ}(S C S)` for the normalized ReLU `φ(√d·G h / ‖G h‖)`.
///
/// Uses `1/‖u‖² = ½∫ exp(-t‖u‖²/2) dt`, which turns the expectation into a
/// one-dimensional integral of arc-cosine kernels of `Σ(I + tΣ)⁻¹`,
/// `Σ = G·SCS·G`. The integral is taken in `t = eˣ` with the trapezoid rule,
/// which converges geometrically for this analytic integrand.
pub fn v_dphi(cfg: &MeanFieldConfig, c: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    check_input(cfg, c)?;
    let d = cfg.d;
    let scs = c.diag_conjugate(&cfg.s);
    let scale = scs.data().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let sigma = scs.sandwich(&SymmetricMatrix::centering(d));
    let eig = sym_eigen(&sigma)?;
    let lmax = eig.values.iter().cloned().fold(0.0, f64::max);
    let cut = 1e-12 * scale;
    let kept: Vec<usize> = (0..d).filter(|&k| eig.values[k] > cut).collect();
    if kept.is_empty() {
        return Err(MeanFieldError::DegenerateCovariance(
            "centered covariance vanishes, normalization undefined".into(),
        ));
    }
    let lam: Vec<f64> = kept.iter().map(|&k| eig.values[k]).collect();
    let lmin = lam.iter().cloned().fold(f64::INFINITY, f64::min);
    let rank = lam.len() as f64;
    let lo = -lmax.ln() - QUAD_HEAD;
    let hi = -lmin.ln() + QUAD_TAIL * 2.0 / rank.max(1.0) + 4.0;
    let steps = ((hi - lo) / QUAD_STEP).ceil() as usize;
    let vecs: Vec<Vec<f64>> = kept
        .iter()
        .map(|&k| (0..d).map(|i| eig.vectors.get(i, k)).collect())
        .collect();

    let mut acc = vec![0.0; d * d];
    let mut st = vec![0.0; d * d];
    for step in 0..=steps {
        let x = lo + step as f64 * QUAD_STEP;
        let t = x.exp();
        let weight = if step == 0 || step == steps { 0.5 } else { 1.0 };
        let mut log_det = 0.0;
        let shrunk: Vec<f64> = lam
            .iter()
            .map(|&l| {
                log_det += (1.0 + t * l).ln();
                l / (1.0 + t * l)
            })
            .collect();
        let scale = weight * t * (-0.5 * log_det).exp();
        if scale == 0.0 {
            continue;
        }
        for i in 0..d {
            for j in i..d {
                let mut v = 0.0;
                for (k, vk) in vecs.iter().enumerate() {
                    v += vk[i] * shrunk[k] * vk[j];
                }
                st[i * d + j] = v;
            }
        }
        for i in 0..d {
            for j in i..d {
                let k = if i == j {
                    st[i * d + i].max(0.0) / 2.0
                } else {
                    relu_pair(st[i * d + i], st[j * d + j], st[i * d + j])
                };
                acc[i * d + j] += scale * k;
            }
        }
    }
    let factor = 0.5 * d as f64 * QUAD_STEP;
    Ok(SymmetricMatrix::from_upper(d, |i, j| factor * acc[i * d + j]))
}

/// The activation kernel selected by `cfg.normalized`.
pub fn v_phi(cfg: &MeanFieldConfig, c: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    if cfg.normalized {
        v_dphi(cfg, c)
    } else {
        v_phi_closed(cfg, c)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: SymmetricMatrix,
    pub std_err: SymmetricMatrix,
    pub samples: usize,
}

const MC_BLOCK: usize = 8192;

/// Monte Carlo estimate of the kernel selected by `cfg.normalized`, drawn in
/// fixed blocks so the result does not depend on the thread count.
pub fn v_phi_mc(
    cfg: &MeanFieldConfig,
    c: &SymmetricMatrix,
    samples: usize,
    rng: &RngStream,
) -> Result<MonteCarloEstimate> {
    check_input(cfg, c)?;
    if samples < 2 {
        return Err(MeanFieldError::InvalidConfig("need at least two samples".into()));
    }
    let d = cfg.d;
    let root = psd_sqrt(&c.diag_conjugate(&cfg.s))?;
    let blocks = samples.div_ceil(MC_BLOCK);
    let sqrt_d = (d as f64).sqrt();
    let partial: Vec<(Vec<f64>, Vec<f64>)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut r = rng.substream(b as u64);
            let count = MC_BLOCK.min(samples - b * MC_BLOCK);
            let mut sum = vec![0.0; d * d];
            let mut sq = vec![0.0; d * d];
            let mut z = vec![0.0; d];
            let mut h = vec![0.0; d];
            for _ in 0..count {
                z.iter_mut().for_each(|x| *x = r.normal());
                for (i, hi) in h.iter_mut().enumerate() {
                    *hi = (0..d).map(|k| root.get(i, k) * z[k]).sum();
                }
                if cfg.normalized {
                    let mean = h.iter().sum::<f64>() / d as f64;
                    h.iter_mut().for_each(|x| *x -= mean);
                    let norm = h.iter().map(|x| x * x).sum::<f64>().sqrt();
                    let k = if norm > 0.0 { sqrt_d / norm } else { 0.0 };
                    h.iter_mut().for_each(|x| *x *= k);
                }
                h.iter_mut().for_each(|x| *x = x.max(0.0));
                for i in 0..d {
                    for j in i..d {
                        let p = h[i] * h[j];
                        sum[i * d + j] += p;
                        sq[i * d + j] += p * p;
                    }
                }
            }
            (sum, sq)
        })
        .collect();
    let mut sum = vec![0.0; d * d];
    let mut sq = vec![0.0; d * d];
    for (s, q) in &partial {
        for k in 0..d * d {
            sum[k] += s[k];
            sq[k] += q[k];
        }
    }
    let n = samples as f64;
    let mean = SymmetricMatrix::from_upper(d, |i, j| sum[i * d + j] / n);
    let std_err = SymmetricMatrix::from_upper(d, |i, j| {
        let m = sum[i * d + j] / n;
        let var = (sq[i * d + j] / n - m * m).max(0.0) * n / (n - 1.0);
        (var / n).sqrt()
    });
    Ok(MonteCarloEstimate { mean, std_err, samples })
}

pub(crate) fn check_input(cfg: &MeanFieldConfig, c: &SymmetricMatrix) -> Result<()> {
    cfg.validate()?;
    if c.dim() != cfg.d {
        return Err(MeanFieldError::InvalidConfig(format!(
            "covariance is {0}×{0}, configuration expects d = {1}",
            c.dim(),
            cfg.d
        )));
    }
    if !c.is_finite() {
        return Err(MeanFieldError::DegenerateCovariance("non-finite entry".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_gives_half_and_inverse_two_pi() {
        let cfg = MeanFieldConfig::new(4, 0.0).unwrap();
        let v = v_phi_closed(&cfg, &SymmetricMatrix::identity(4)).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 0.5 } else { 1.0 / (2.0 * PI) };
                assert!((v.get(i, j) - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn perfectly_correlated_pair_is_half_variance() {
        assert!((relu_pair(2.0, 2.0, 2.0) - 1.0).abs() < 1e-15);
        assert_eq!(relu_pair(0.0, 1.0, 0.0), 0.0);
        assert!(relu_pair(1.0, 1.0, -1.0).abs() < 1e-15);
    }

    #[test]
    fn normalized_kernel_diagonal_mean_is_half() {
        // Σ_i relu(u_i)² over ‖u‖² has mean 1/2 per coordinate for any
        // centered symmetric law, so the trace of V equals d/2.
        let cfg = MeanFieldConfig::new(5, 0.0).unwrap().normalized(true);
        let c = SymmetricMatrix::from_upper(5, |i, j| if i == j { 1.0 + 0.1 * i as f64 } else { 0.2 });
        let v = v_dphi(&cfg, &c).unwrap();
        assert!((v.trace() - 2.5).abs() < 1e-12, "{}", v.trace());
        let scaled = v_dphi(&cfg, &c.scale(7.0)).unwrap();
        assert!(scaled.max_abs_diff(&v) < 1e-12);
    }

    #[test]
    fn normalized_kernel_rejects_constant_vectors() {
        let cfg = MeanFieldConfig::new(3, 0.0).unwrap().normalized(true);
        assert!(matches!(
            v_dphi(&cfg, &SymmetricMatrix::ones(3)),
            Err(MeanFieldError::DegenerateCovariance(_))
        ));
    }

    #[test]
    fn mc_is_deterministic() {
        let cfg = MeanFieldConfig::new(3, 0.0).unwrap();
        let rng = RngStream::new(9);
        let a = v_phi_mc(&cfg, &SymmetricMatrix::identity(3), 20_000, &rng).unwrap();
        let b = v_phi_mc(&cfg, &SymmetricMatrix::identity(3), 20_000, &rng).unwrap();
        assert_eq!(a.mean, b.mean);
    }
}
