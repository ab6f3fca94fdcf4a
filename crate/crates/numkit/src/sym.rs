use serde::{Deserialize, Serialize};

use crate::{DenseMatrix, NumError, Result};

/// A `d × d` real symmetric matrix, an element of the space `H_d`.
///
/// Full storage is kept for cheap indexing; every constructor writes both
/// triangles from a single value so `m[i][j] == m[j][i]` holds bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    /// Builds from a closure evaluated on the upper triangle (`i <= j`).
    pub fn from_upper(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(dim >= 1, "symmetric matrix needs dim >= 1");
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                data[i * dim + j] = v;
                data[j * dim + i] = v;
            }
        }
        Self { dim, data }
    }

    /// Accepts a dense matrix only if it is exactly symmetric.
    pub fn from_dense(m: &DenseMatrix) -> Result<Self> {
        let (r, c) = m.shape();
        if r != c || r == 0 {
            return Err(NumError::Shape {
                expected: "non-empty square matrix".into(),
                got: format!("{r}x{c}"),
            });
        }
        for i in 0..r {
            for j in (i + 1)..r {
                let diff = (m.get(i, j) - m.get(j, i)).abs();
                if diff != 0.0 {
                    return Err(NumError::NotSymmetric { i, j, diff });
                }
            }
        }
        if !m.is_finite() {
            return Err(NumError::InvalidInput("non-finite entry".into()));
        }
        Ok(Self {
            dim: r,
            data: m.data().to_vec(),
        })
    }

    /// `(m + mᵀ) / 2`.
    pub fn symmetrize(m: &DenseMatrix) -> Result<Self> {
        let (r, c) = m.shape();
        if r != c || r == 0 {
            return Err(NumError::Shape {
                expected: "non-empty square matrix".into(),
                got: format!("{r}x{c}"),
            });
        }
        Ok(Self::from_upper(r, |i, j| 0.5 * (m.get(i, j) + m.get(j, i))))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_dense(&DenseMatrix::from_rows(rows)?)
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_upper(dim, |_, _| 0.0)
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_upper(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    /// The all-ones matrix `𝟙𝟙ᵀ`.
    pub fn ones(dim: usize) -> Self {
        Self::from_upper(dim, |_, _| 1.0)
    }

    /// Mean-removal projector `G = I − 𝟙𝟙ᵀ/d`.
    pub fn centering(dim: usize) -> Self {
        let inv = 1.0 / dim as f64;
        Self::from_upper(dim, |i, j| if i == j { 1.0 - inv } else { -inv })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self::from_upper(values.len(), |i, j| if i == j { values[i] } else { 0.0 })
    }

    /// `E_ii` for `i == j`, otherwise `E_ij + E_ji`.
    pub fn basis_element(dim: usize, i: usize, j: usize) -> Self {
        let (a, b) = (i.min(j), i.max(j));
        Self::from_upper(dim, |p, q| if p == a && q == b { 1.0 } else { 0.0 })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::new(self.dim, self.dim, self.data.clone()).expect("square storage")
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|x| alpha * x).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// `self + alpha·other`.
    pub fn axpy(&self, alpha: f64, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        }
    }

    /// Frobenius inner product `⟨A, B⟩ = tr(AᵀB)`.
    pub fn inner(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `S·self·S` for the diagonal matrix `S = diag(s)`.
    pub fn diag_conjugate(&self, s: &[f64]) -> Self {
        assert_eq!(s.len(), self.dim, "scaling vector length");
        Self::from_upper(self.dim, |i, j| s[i] * self.get(i, j) * s[j])
    }

    /// `A·self·Aᵀ` for a symmetric `A` (used with `A = G`).
    pub fn sandwich(&self, a: &Self) -> Self {
        let d = self.dim;
        assert_eq!(a.dim, d, "dimension mismatch");
        let mut tmp = vec![0.0; d * d];
        for i in 0..d {
            for k in 0..d {
                let aik = a.get(i, k);
                if aik != 0.0 {
                    for j in 0..d {
                        tmp[i * d + j] += aik * self.get(k, j);
                    }
                }
            }
        }
        Self::from_upper(d, |i, j| (0..d).map(|k| tmp[i * d + k] * a.get(j, k)).sum())
    }
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending and the
/// matching orthonormal eigenvectors stored as columns.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

impl SymEigen {
    /// `V·diag(f(λ))·Vᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymmetricMatrix {
        let d = self.values.len();
        let fl: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let v = &self.vectors;
        SymmetricMatrix::from_upper(d, |i, j| (0..d).map(|k| v.get(i, k) * fl[k] * v.get(j, k)).sum())
    }

    pub fn reconstruct(&self) -> SymmetricMatrix {
        self.reconstruct_with(|l| l)
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigensolver.
pub fn sym_eigen(m: &SymmetricMatrix) -> Result<SymEigen> {
    if !m.is_finite() {
        return Err(NumError::InvalidInput("non-finite entry in symmetric matrix".into()));
    }
    let d = m.dim();
    let mut a: Vec<f64> = m.data().to_vec();
    let mut v = vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }
    let scale = m.frobenius_norm();
    if scale > 0.0 {
        for _ in 0..JACOBI_MAX_SWEEPS {
            let off: f64 = (0..d)
                .flat_map(|p| ((p + 1)..d).map(move |q| (p, q)))
                .map(|(p, q)| a[p * d + q] * a[p * d + q])
                .sum();
            if off.sqrt() <= 1e-15 * scale {
                break;
            }
            for p in 0..d {
                for q in (p + 1)..d {
                    let apq = a[p * d + q];
                    if apq.abs() <= f64::MIN_POSITIVE {
                        continue;
                    }
                    let app = a[p * d + p];
                    let aqq = a[q * d + q];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..d {
                        let akp = a[k * d + p];
                        let akq = a[k * d + q];
                        a[k * d + p] = c * akp - s * akq;
                        a[k * d + q] = s * akp + c * akq;
                    }
                    for k in 0..d {
                        let apk = a[p * d + k];
                        let aqk = a[q * d + k];
                        a[p * d + k] = c * apk - s * aqk;
                        a[q * d + k] = s * apk + c * aqk;
                    }
                    for k in 0..d {
                        let vkp = v[k * d + p];
                        let vkq = v[k * d + q];
                        v[k * d + p] = c * vkp - s * vkq;
                        v[k * d + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&x, &y| a[x * d + x].total_cmp(&a[y * d + y]));
    let values = order.iter().map(|&k| a[k * d + k]).collect();
    let vectors = DenseMatrix::from_fn(d, d, |i, j| v[i * d + order[j]]);
    Ok(SymEigen { values, vectors })
}
