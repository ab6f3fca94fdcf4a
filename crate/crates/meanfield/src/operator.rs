use numkit::{DenseMatrix, RngStream, SymmetricMatrix};
use serde::{Deserialize, Serialize};

use crate::{MeanFieldError, Result};

/// Number of free coordinates of `H_d`.
pub fn svec_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Orthonormal coordinates of a symmetric matrix: `c_ii` and `√2·c_ij` for
/// `i < j`, upper triangle in row-major order.
pub fn svec(m: &SymmetricMatrix) -> Vec<f64> {
    let d = m.dim();
    let mut out = Vec::with_capacity(svec_len(d));
    for i in 0..d {
        for j in i..d {
            out.push(if i == j { m.get(i, i) } else { std::f64::consts::SQRT_2 * m.get(i, j) });
        }
    }
    out
}

pub fn smat(d: usize, v: &[f64]) -> SymmetricMatrix {
    assert_eq!(v.len(), svec_len(d), "svec length");
    let mut k = 0;
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for j in i..d {
            let x = if i == j { v[k] } else { v[k] / std::f64::consts::SQRT_2 };
            out[i * d + j] = x;
            out[j * d + i] = x;
            k += 1;
        }
    }
    SymmetricMatrix::from_upper(d, |i, j| out[i * d + j])
}

/// The `k`-th orthonormal basis element of `H_d`.
pub fn basis(d: usize, k: usize) -> SymmetricMatrix {
    let mut v = vec![0.0; svec_len(d)];
    v[k] = 1.0;
    smat(d, &v)
}

/// A linear operator on `H_d`, stored as a matrix in [`svec`] coordinates so
/// its Frobenius norm and transpose agree with the trace inner product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricOperator {
    dim: usize,
    matrix: DenseMatrix,
}

impl SymmetricOperator {
    pub fn from_matrix(dim: usize, matrix: DenseMatrix) -> Result<Self> {
        let n = svec_len(dim);
        if matrix.shape() != (n, n) {
            return Err(MeanFieldError::InvalidConfig(format!(
                "operator matrix is {:?}, expected {n}×{n}",
                matrix.shape()
            )));
        }
        Ok(Self { dim, matrix })
    }

    /// Tabulates a linear map by applying it to every basis element.
    pub fn from_linear(dim: usize, f: impl Fn(&SymmetricMatrix) -> SymmetricMatrix) -> Self {
        let n = svec_len(dim);
        let mut matrix = DenseMatrix::zeros(n, n);
        for k in 0..n {
            let col = svec(&f(&basis(dim, k)));
            for (r, v) in col.into_iter().enumerate() {
                matrix.set(r, k, v);
            }
        }
        Self { dim, matrix }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn apply(&self, m: &SymmetricMatrix) -> SymmetricMatrix {
        smat(self.dim, &self.apply_svec(&svec(m)))
    }

    pub fn apply_svec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.matrix.rows())
            .map(|r| self.matrix.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Adjoint with respect to the trace inner product.
    pub fn adjoint(&self) -> Self {
        Self {
            dim: self.dim,
            matrix: self.matrix.transpose(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.frobenius_norm()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.matrix.max_abs_diff(&other.matrix)
    }

    fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        let data = self
            .matrix
            .data()
            .iter()
            .zip(other.matrix.data())
            .map(|(x, y)| a * x + b * y)
            .collect();
        let n = self.matrix.rows();
        Self {
            dim: self.dim,
            matrix: DenseMatrix::new(n, n, data).expect("same shape"),
        }
    }
}

fn check_step(h: f64, at: &SymmetricMatrix) -> Result<()> {
    let scale = at.data().iter().fold(1.0f64, |m, x| m.max(x.abs()));
    if !(h > 0.0) || !h.is_finite() || h < 1e3 * f64::EPSILON * scale {
        return Err(MeanFieldError::StepUnderflow(h));
    }
    Ok(())
}

/// Central-difference Jacobian of `map` at `at`, one column per orthonormal
/// basis direction.
pub fn jacobian_fd(
    map: impl Fn(&SymmetricMatrix) -> Result<SymmetricMatrix>,
    at: &SymmetricMatrix,
    h: f64,
) -> Result<SymmetricOperator> {
    check_step(h, at)?;
    let d = at.dim();
    let n = svec_len(d);
    let mut matrix = DenseMatrix::zeros(n, n);
    for k in 0..n {
        let e = basis(d, k);
        let plus = map(&at.axpy(h, &e))?;
        let minus = map(&at.axpy(-h, &e))?;
        let col = svec(&plus.sub(&minus).scale(0.5 / h));
        for (r, v) in col.into_iter().enumerate() {
            matrix.set(r, k, v);
        }
    }
    Ok(SymmetricOperator { dim: d, matrix })
}

/// Richardson-extrapolated Jacobian `(4·J(h/2) − J(h)) / 3`.
pub fn jacobian_fd_richardson(
    map: impl Fn(&SymmetricMatrix) -> Result<SymmetricMatrix>,
    at: &SymmetricMatrix,
    h: f64,
) -> Result<SymmetricOperator> {
    let coarse = jacobian_fd(&map, at, h)?;
    let fine = jacobian_fd(&map, at, h / 2.0)?;
    Ok(fine.combine(4.0 / 3.0, &coarse, -1.0 / 3.0))
}

/// Largest relative mismatch between `J·X` and a central difference of `map`
/// along random unit directions `X`.
pub fn linearity_residual(
    map: impl Fn(&SymmetricMatrix) -> Result<SymmetricMatrix>,
    at: &SymmetricMatrix,
    jac: &SymmetricOperator,
    h: f64,
    trials: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    check_step(h, at)?;
    let d = at.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let mut v: Vec<f64> = (0..svec_len(d)).map(|_| rng.normal()).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let x = smat(d, &v);
        let fd = map(&at.axpy(h, &x))?.sub(&map(&at.axpy(-h, &x))?).scale(0.5 / h);
        let lin = jac.apply(&x);
        let denom = lin.frobenius_norm().max(fd.frobenius_norm()).max(1e-300);
        worst = worst.max(fd.sub(&lin).frobenius_norm() / denom);
    }
    Ok(worst)
}
