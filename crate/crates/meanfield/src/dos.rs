use numkit::{sym_eigen, DenseMatrix, SymmetricMatrix};
use serde::{Deserialize, Serialize};

use crate::operator::{svec, svec_len, SymmetricOperator};
use crate::{MeanFieldError, Result};

/// Diagonal-off-diagonal semidirect operator:
/// `T(C)_ii = u·c_ii`, `T(C)_ij = v·c_ii + v·c_jj + w·c_ij`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DosOperator {
    pub d: usize,
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

impl DosOperator {
    pub fn new(d: usize, u: f64, v: f64, w: f64) -> Self {
        Self { d, u, v, w }
    }

    pub fn to_operator(&self) -> SymmetricOperator {
        SymmetricOperator::from_linear(self.d, |c| dos_apply(self, c))
    }

    /// Eigenvectors with eigenvalue `u`:
    /// `L_i = (w − u)·E_ii − v·(e_i𝟙ᵀ + 𝟙e_iᵀ − 2E_ii)`.
    pub fn l_eigenvector(&self, i: usize) -> SymmetricMatrix {
        SymmetricMatrix::from_upper(self.d, |a, b| {
            if a == i && b == i {
                self.w - self.u
            } else if a == i || b == i {
                -self.v
            } else {
                0.0
            }
        })
    }

    /// Reads `(u, v, w)` off an operator and reports how far it is from the
    /// resulting DOS form (max entry difference).
    pub fn fit(op: &SymmetricOperator) -> (Self, f64) {
        let d = op.dim();
        assert!(d >= 2, "DOS fit needs d >= 2");
        let e00 = op.apply(&SymmetricMatrix::basis_element(d, 0, 0));
        let m01 = op.apply(&SymmetricMatrix::basis_element(d, 0, 1));
        let fitted = Self::new(d, e00.get(0, 0), e00.get(0, 1), m01.get(0, 1));
        let residual = fitted.to_operator().max_abs_diff(op);
        (fitted, residual)
    }
}

pub fn dos_apply(t: &DosOperator, c: &SymmetricMatrix) -> SymmetricMatrix {
    assert_eq!(c.dim(), t.d, "dimension mismatch");
    SymmetricMatrix::from_upper(t.d, |i, j| {
        if i == j {
            t.u * c.get(i, i)
        } else {
            t.v * c.get(i, i) + t.v * c.get(j, j) + t.w * c.get(i, j)
        }
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DosEigenReport {
    /// Largest `|T(M_ij) − w·M_ij|` entry over the off-diagonal basis.
    pub m_residual: f64,
    /// Largest `|T(L_i) − u·L_i|` entry.
    pub l_residual: f64,
    pub w_multiplicity: usize,
    pub u_multiplicity: usize,
    /// Rank of all listed eigenvectors together; `d(d+1)/2` means they span `H_d`.
    pub rank: usize,
    pub spans_space: bool,
}

/// Checks the closed-form eigenvectors of `t`.
pub fn dos_eigencheck(t: &DosOperator) -> Result<DosEigenReport> {
    if t.w == t.u {
        return Err(MeanFieldError::DegenerateOperator(t.u));
    }
    let d = t.d;
    let mut vectors = Vec::new();
    let mut m_residual: f64 = 0.0;
    for i in 0..d {
        for j in i + 1..d {
            let m = SymmetricMatrix::basis_element(d, i, j);
            m_residual = m_residual.max(dos_apply(t, &m).max_abs_diff(&m.scale(t.w)));
            vectors.push(svec(&m));
        }
    }
    let mut l_residual: f64 = 0.0;
    for i in 0..d {
        let l = t.l_eigenvector(i);
        l_residual = l_residual.max(dos_apply(t, &l).max_abs_diff(&l.scale(t.u)));
        vectors.push(svec(&l));
    }
    let n = svec_len(d);
    let stacked = DenseMatrix::from_fn(vectors.len(), n, |r, c| vectors[r][c]);
    let gram = SymmetricMatrix::symmetrize(&stacked.t_matmul(&stacked)?)?;
    let eig = sym_eigen(&gram)?;
    let top = eig.values.iter().cloned().fold(0.0, f64::max);
    let rank = eig.values.iter().filter(|&&l| l > 1e-10 * top).count();
    Ok(DosEigenReport {
        m_residual,
        l_residual,
        w_multiplicity: d * (d - 1) / 2,
        u_multiplicity: d,
        rank,
        spans_space: rank == n,
    })
}
