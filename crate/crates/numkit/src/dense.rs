use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{NumError, Result};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Rows per partial sum in reductions over rows. Fixed so the summation order
/// does not depend on the number of worker threads.
const REDUCE_CHUNK_MIN: usize = 256;
const REDUCE_CHUNKS_MAX: usize = 64;

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(NumError::Shape {
                expected: format!("{} entries ({rows}x{cols})", rows * cols),
                got: format!("{} entries", data.len()),
            });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(NumError::InvalidInput(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(NumError::Shape {
                expected: format!("rows of length {cols}"),
                got: "ragged rows".into(),
            });
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(NumError::Shape {
                expected: format!("{:?}", self.shape()),
                got: format!("{:?}", other.shape()),
            });
        }
        Ok(())
    }

    /// `self · other`. Zero entries of `self` are skipped, which makes sparse
    /// bag-of-words feature matrices cheap without a separate sparse type.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(NumError::Shape {
                expected: format!("rhs with {} rows", self.cols),
                got: format!("{:?}", other.shape()),
            });
        }
        let q = other.cols;
        let mut out = Self::zeros(self.rows, q);
        if q == 0 {
            return Ok(out);
        }
        out.data
            .par_chunks_mut(q)
            .zip(self.data.par_chunks(self.cols.max(1)))
            .for_each(|(dst, a_row)| {
                for (k, &a) in a_row.iter().enumerate() {
                    if a != 0.0 {
                        let b_row = &other.data[k * q..(k + 1) * q];
                        for (d, &b) in dst.iter_mut().zip(b_row) {
                            *d += a * b;
                        }
                    }
                }
            });
        Ok(out)
    }

    /// `selfᵀ · other` without materializing the transpose. The row reduction
    /// is split into a thread-count independent set of chunks and summed in
    /// chunk order.
    pub fn t_matmul(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(NumError::Shape {
                expected: format!("rhs with {} rows", self.rows),
                got: format!("{:?}", other.shape()),
            });
        }
        let (n, p, q) = (self.rows, self.cols, other.cols);
        let chunk = REDUCE_CHUNK_MIN.max(n.div_ceil(REDUCE_CHUNKS_MAX));
        let starts: Vec<usize> = (0..n).step_by(chunk.max(1)).collect();
        let partials: Vec<Vec<f64>> = starts
            .par_iter()
            .map(|&s| {
                let mut acc = vec![0.0; p * q];
                for v in s..(s + chunk).min(n) {
                    let a_row = self.row(v);
                    let b_row = other.row(v);
                    for (k, &a) in a_row.iter().enumerate() {
                        if a != 0.0 {
                            let dst = &mut acc[k * q..(k + 1) * q];
                            for (d, &b) in dst.iter_mut().zip(b_row) {
                                *d += a * b;
                            }
                        }
                    }
                }
                acc
            })
            .collect();
        let mut data = vec![0.0; p * q];
        for part in partials {
            for (d, x) in data.iter_mut().zip(part) {
                *d += x;
            }
        }
        Ok(Self { rows: p, cols: q, data })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(self.zip_map(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(self.zip_map(other, |a, b| a - b))
    }

    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(self.zip_map(other, |a, b| a * b))
    }

    fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn scale(&self, alpha: f64) -> Self {
        self.map(|x| alpha * x)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape(), "max_abs_diff shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (o, x) in out.iter_mut().zip(self.row(i)) {
                *o += x;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_length_and_nan() {
        assert!(DenseMatrix::new(2, 2, vec![0.0; 3]).is_err());
        assert!(DenseMatrix::new(1, 2, vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn frobenius_three_four_five() {
        let m = DenseMatrix::from_rows(&[vec![3.0, 4.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(m.frobenius_norm(), 5.0);
        assert_eq!(DenseMatrix::zeros(3, 2).frobenius_norm(), 0.0);
    }

    #[test]
    fn matmul_matches_naive() {
        let a = DenseMatrix::from_fn(5, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let b = DenseMatrix::from_fn(4, 3, |i, j| (i as f64) * 0.5 - (j as f64));
        let c = a.matmul(&b).unwrap();
        for i in 0..5 {
            for j in 0..3 {
                let want: f64 = (0..4).map(|k| a.get(i, k) * b.get(k, j)).sum();
                assert!((c.get(i, j) - want).abs() < 1e-12);
            }
        }
        let at_b = a.transpose().t_matmul(&a.transpose()).unwrap();
        let direct = a.matmul(&a.transpose()).unwrap();
        assert!(at_b.max_abs_diff(&direct) < 1e-12);
    }

    #[test]
    fn shape_errors() {
        let a = DenseMatrix::zeros(2, 3);
        assert!(a.matmul(&DenseMatrix::zeros(2, 3)).is_err());
        assert!(a.add(&DenseMatrix::zeros(3, 2)).is_err());
    }
}
