use numkit::DenseMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::Graph;

/// Degree normalization applied to the raw adjacency `A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdjacencyVariant {
    /// `A·D⁻¹`: every column of a non-isolated node sums to one.
    Mean,
    /// `D^{-1/2}·A·D^{-1/2}`.
    Symmetric,
    /// `I + D^{-1/2}·A·D^{-1/2}`.
    SelfLoopSymmetric,
    /// `D̃^{-1/2}·(A + I)·D̃^{-1/2}` with `D̃ = D + I`.
    Renormalized,
}

impl AdjacencyVariant {
    pub const ALL: [AdjacencyVariant; 4] = [
        AdjacencyVariant::Mean,
        AdjacencyVariant::Symmetric,
        AdjacencyVariant::SelfLoopSymmetric,
        AdjacencyVariant::Renormalized,
    ];
}

/// Square sparse matrix in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseAdjacency {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseAdjacency {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < n && c < n, "triplet ({r}, {c}) out of range");
            if last == Some((r, c)) {
                *values.last_mut().expect("previous entry") += v;
                continue;
            }
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
            last = Some((r, c));
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[span.clone()].binary_search(&j) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn transpose(&self) -> Self {
        let mut trip = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                trip.push((j, i, v));
            }
        }
        Self::from_triplets(self.n, trip)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m.set(i, j, v);
            }
        }
        m
    }

    /// Largest `|a_ij − a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                out[j] += v;
            }
        }
        out
    }

    /// `self · x` for a dense `x` with `n` rows. Each output row is summed in
    /// CSR order, so results are independent of the thread count.
    pub fn matmul(&self, x: &DenseMatrix) -> DenseMatrix {
        assert_eq!(x.rows(), self.n, "sparse matmul shape mismatch");
        let q = x.cols();
        let mut out = DenseMatrix::zeros(self.n, q);
        if q == 0 {
            return out;
        }
        out.data_mut()
            .par_chunks_mut(q)
            .enumerate()
            .for_each(|(i, dst)| {
                for (j, a) in self.row(i) {
                    for (d, &b) in dst.iter_mut().zip(x.row(j)) {
                        *d += a * b;
                    }
                }
            });
        out
    }
}

/// Number of incident undirected edges per node.
pub fn degrees(g: &Graph) -> Vec<usize> {
    let mut deg = vec![0usize; g.num_nodes()];
    for &(i, j) in g.edges() {
        deg[i as usize] += 1;
        deg[j as usize] += 1;
    }
    deg
}

/// Normalized adjacency `Ã` for the chosen variant. Isolated nodes get empty
/// rows and columns (plus the unit diagonal in the self-loop variants).
pub fn normalize_adjacency(g: &Graph, variant: AdjacencyVariant) -> SparseAdjacency {
    let n = g.num_nodes();
    let deg = degrees(g);
    let inv_sqrt = |d: usize| if d == 0 { 0.0 } else { 1.0 / (d as f64).sqrt() };
    let mut trip = Vec::with_capacity(2 * g.edges().len() + n);
    for &(i, j) in g.edges() {
        let (i, j) = (i as usize, j as usize);
        let (a_ij, a_ji) = match variant {
            AdjacencyVariant::Mean => (1.0 / deg[j] as f64, 1.0 / deg[i] as f64),
            AdjacencyVariant::Symmetric | AdjacencyVariant::SelfLoopSymmetric => {
                let w = inv_sqrt(deg[i]) * inv_sqrt(deg[j]);
                (w, w)
            }
            AdjacencyVariant::Renormalized => {
                let w = 1.0 / (((deg[i] + 1) * (deg[j] + 1)) as f64).sqrt();
                (w, w)
            }
        };
        trip.push((i, j, a_ij));
        trip.push((j, i, a_ji));
    }
    match variant {
        AdjacencyVariant::SelfLoopSymmetric => trip.extend((0..n).map(|i| (i, i, 1.0))),
        AdjacencyVariant::Renormalized => {
            trip.extend((0..n).map(|i| (i, i, 1.0 / (deg[i] + 1) as f64)))
        }
        _ => {}
    }
    SparseAdjacency::from_triplets(n, trip)
}
