use numkit::DenseMatrix;
use serde::{Deserialize, Serialize};

use crate::{GcnError, Result};

/// Row-wise softmax.
pub fn softmax(logits: &DenseMatrix) -> DenseMatrix {
    let mut p = logits.clone();
    let k = p.cols();
    for row in p.data_mut().chunks_mut(k) {
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for x in row.iter_mut() {
            *x = (*x - m).exp();
            z += *x;
        }
        row.iter_mut().for_each(|x| *x /= z);
    }
    p
}

/// Mean negative log-likelihood over `mask`, plus the probabilities.
pub fn softmax_cross_entropy(logits: &DenseMatrix, labels: &[usize], mask: &[usize]) -> Result<(f64, DenseMatrix)> {
    if mask.is_empty() {
        return Err(GcnError::EmptyMask("loss"));
    }
    if labels.len() != logits.rows() {
        return Err(GcnError::Shape(format!("{} labels for {} rows", labels.len(), logits.rows())));
    }
    let probs = softmax(logits);
    let mut loss = 0.0;
    for &v in mask {
        let row = logits.row(v);
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + row.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
        loss += lse - row[labels[v]];
    }
    Ok((loss / mask.len() as f64, probs))
}

/// `∂(mean NLL)/∂logits`: `(p − onehot)/|mask|` on masked rows, zero elsewhere.
pub fn cross_entropy_grad(probs: &DenseMatrix, labels: &[usize], mask: &[usize]) -> DenseMatrix {
    let mut g = DenseMatrix::zeros(probs.rows(), probs.cols());
    let scale = 1.0 / mask.len() as f64;
    for &v in mask {
        let dst = g.row_mut(v);
        dst.copy_from_slice(probs.row(v));
        dst[labels[v]] -= 1.0;
        dst.iter_mut().for_each(|x| *x *= scale);
    }
    g
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in row.iter().enumerate() {
        if x > row[best] {
            best = i;
        }
    }
    best
}

pub fn accuracy(logits: &DenseMatrix, labels: &[usize], idx: &[usize]) -> Result<f64> {
    if idx.is_empty() {
        return Err(GcnError::EmptyMask("evaluation"));
    }
    let hits = idx.iter().filter(|&&v| argmax(logits.row(v)) == labels[v]).count();
    Ok(hits as f64 / idx.len() as f64)
}

/// Objective split into data term and `λ·Σ‖W‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub data: f64,
    pub decay: f64,
    pub total: f64,
}
