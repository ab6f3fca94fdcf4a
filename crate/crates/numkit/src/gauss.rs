use rayon::prelude::*;

use crate::{sym_eigen, DenseMatrix, NumError, Result, RngStream, SymmetricMatrix};

/// Eigenvalues below `-PSD_TOLERANCE·max(1, λ_max)` mark a covariance as
/// indefinite; anything above is clipped to zero.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Symmetric square root `V·diag(√max(λ,0))·Vᵀ` of a PSD matrix.
pub fn psd_sqrt(c: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    let eig = sym_eigen(c)?;
    let lmax = eig.values.last().copied().unwrap_or(0.0).max(1.0);
    let lmin = eig.values[0];
    if lmin < -PSD_TOLERANCE * lmax {
        return Err(NumError::InvalidCovariance { min_eigenvalue: lmin });
    }
    Ok(eig.reconstruct_with(|l| l.max(0.0).sqrt()))
}

/// Rows per RNG substream; fixed so the output does not depend on threads.
const SAMPLE_BLOCK: usize = 4096;

/// `n` i.i.d. rows drawn from `N(0, c)`.
pub fn gaussian_sample(c: &SymmetricMatrix, n: usize, rng: &RngStream) -> Result<DenseMatrix> {
    let root = psd_sqrt(c)?;
    let d = c.dim();
    let mut data = vec![0.0; n * d];
    data.par_chunks_mut(SAMPLE_BLOCK * d)
        .enumerate()
        .for_each(|(block, chunk)| {
            let mut r = rng.substream(block as u64);
            let mut z = vec![0.0; d];
            for row in chunk.chunks_mut(d) {
                z.iter_mut().for_each(|x| *x = r.normal());
                for (i, out) in row.iter_mut().enumerate() {
                    *out = (0..d).map(|k| root.get(i, k) * z[k]).sum();
                }
            }
        });
    DenseMatrix::new(n, d, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_cov(x: &DenseMatrix) -> DenseMatrix {
        x.t_matmul(x).unwrap().scale(1.0 / x.rows() as f64)
    }

    #[test]
    fn zero_covariance_gives_zero_samples() {
        let x = gaussian_sample(&SymmetricMatrix::zeros(3), 100, &RngStream::new(1)).unwrap();
        assert!(x.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_covariance_monte_carlo() {
        let x = gaussian_sample(&SymmetricMatrix::identity(2), 1_000_000, &RngStream::new(3)).unwrap();
        let c = sample_cov(&x);
        assert!(c.get(0, 1).abs() < 0.005);
        assert!((c.get(0, 0) - 1.0).abs() < 0.01);
        assert!((c.get(1, 1) - 1.0).abs() < 0.01);
    }

    #[test]
    fn correlated_covariance_monte_carlo() {
        let cov = SymmetricMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let x = gaussian_sample(&cov, 1_000_000, &RngStream::new(4)).unwrap();
        let c = sample_cov(&x);
        let corr = c.get(0, 1) / (c.get(0, 0) * c.get(1, 1)).sqrt();
        assert!((corr - 0.5).abs() < 0.005, "corr {corr}");
    }

    #[test]
    fn entrywise_within_five_standard_errors() {
        let cov = SymmetricMatrix::from_rows(&[
            vec![2.0, 0.3, -0.4],
            vec![0.3, 1.0, 0.2],
            vec![-0.4, 0.2, 0.5],
        ])
        .unwrap();
        let n = 1_000_000;
        let x = gaussian_sample(&cov, n, &RngStream::new(5)).unwrap();
        let c = sample_cov(&x);
        for i in 0..3 {
            for j in 0..3 {
                // Var(x_i x_j) = c_ii c_jj + c_ij² for a centered Gaussian.
                let se = ((cov.get(i, i) * cov.get(j, j) + cov.get(i, j).powi(2)) / n as f64).sqrt();
                assert!((c.get(i, j) - cov.get(i, j)).abs() < 5.0 * se);
            }
        }
    }

    #[test]
    fn indefinite_rejected_and_tiny_negative_clipped() {
        let bad = SymmetricMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            gaussian_sample(&bad, 10, &RngStream::new(0)),
            Err(NumError::InvalidCovariance { .. })
        ));
        let near = SymmetricMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0 - 1e-13]]).unwrap();
        assert!(gaussian_sample(&near, 10, &RngStream::new(0)).is_ok());
    }

    #[test]
    fn deterministic_given_seed() {
        let c = SymmetricMatrix::identity(3);
        let a = gaussian_sample(&c, 10_000, &RngStream::new(9)).unwrap();
        let b = gaussian_sample(&c, 10_000, &RngStream::new(9)).unwrap();
        assert_eq!(a, b);
    }
}
