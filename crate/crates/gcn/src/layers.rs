use graphstore::SparseAdjacency;
use numkit::DenseMatrix;

use crate::params::{DrParams, LayerParams};
use crate::spec::{elu, sigmoid, Activation};
use crate::{GcnError, Result};

/// Uniform pooling weights over every node not listed in `excluded`.
pub fn uniform_pool_weights(n: usize, excluded: &[u32]) -> Vec<f64> {
    let mut w = vec![1.0; n];
    for &v in excluded {
        w[v as usize] = 0.0;
    }
    let count = w.iter().filter(|&&x| x > 0.0).count().max(1) as f64;
    w.iter_mut().for_each(|x| *x /= count);
    w
}

/// `Σ_v w_v·z_v`.
pub fn pool(z: &DenseMatrix, weights: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; z.cols()];
    for (v, &w) in weights.iter().enumerate() {
        if w != 0.0 {
            for (acc, &x) in r.iter_mut().zip(z.row(v)) {
                *acc += w * x;
            }
        }
    }
    r
}

fn affine(m: &DenseMatrix, v: &[f64], bias: &[f64]) -> Vec<f64> {
    (0..m.rows())
        .map(|i| m.row(i).iter().zip(v).map(|(a, b)| a * b).sum::<f64>() + bias[i])
        .collect()
}

/// Intermediate values of the Dr block, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct DrForward {
    pub r: Vec<f64>,
    pub a: Vec<f64>,
    pub g: Vec<f64>,
    pub s: Vec<f64>,
}

/// `g = ELU(W_g r + b_g)`, `s = sigmoid(W_s g + b_s)`.
pub fn dr_from_pooled(r: Vec<f64>, dr: &DrParams) -> DrForward {
    let a = affine(&dr.w_g, &r, &dr.b_g);
    let g: Vec<f64> = a.iter().map(|&x| elu(x)).collect();
    let s = affine(&dr.w_s, &g, &dr.b_s).into_iter().map(sigmoid).collect();
    DrForward { r, a, g, s }
}

/// The per-dimension scale `s` computed from the pooled input.
pub fn dr_vector(r_in: &DenseMatrix, dr: &DrParams, pool_weights: &[f64]) -> Result<Vec<f64>> {
    if dr.w_g.cols() != r_in.cols() || pool_weights.len() != r_in.rows() {
        return Err(GcnError::Shape(format!(
            "Dr block expects {} dims and {} pool weights, got input {:?}",
            dr.w_g.cols(),
            pool_weights.len(),
            r_in.shape()
        )));
    }
    Ok(dr_from_pooled(pool(r_in, pool_weights), dr).s)
}

/// Gradients of the Dr parameters and of the pooled vector `r` given `∂L/∂s`.
pub fn dr_backward(dr: &DrParams, fwd: &DrForward, ds: &[f64]) -> (DrParams, Vec<f64>) {
    let (gd, ind) = (fwd.g.len(), fwd.r.len());
    let dc: Vec<f64> = ds.iter().zip(&fwd.s).map(|(d, s)| d * s * (1.0 - s)).collect();
    let w_s = DenseMatrix::from_fn(ind, gd, |i, k| dc[i] * fwd.g[k]);
    let dg: Vec<f64> = (0..gd).map(|k| (0..ind).map(|i| dr.w_s.get(i, k) * dc[i]).sum()).collect();
    let da: Vec<f64> = dg
        .iter()
        .zip(&fwd.a)
        .map(|(d, &a)| d * Activation::Elu.derivative(a))
        .collect();
    let w_g = DenseMatrix::from_fn(gd, ind, |k, j| da[k] * fwd.r[j]);
    let dr_vec = (0..ind).map(|j| (0..gd).map(|k| dr.w_g.get(k, j) * da[k]).sum()).collect();
    (
        DrParams {
            w_g,
            b_g: da,
            w_s,
            b_s: dc,
        },
        dr_vec,
    )
}

/// Standardized values and inverse deviations of a batch or layer norm.
#[derive(Debug, Clone)]
pub struct NormCache {
    pub xhat: DenseMatrix,
    pub inv_std: Vec<f64>,
}

fn standardize(values: &mut [f64], eps: f64) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let inv = 1.0 / (var + eps).sqrt();
    values.iter_mut().for_each(|x| *x = (*x - mean) * inv);
    inv
}

/// Per-dimension standardization over all nodes, then `γ·x̂ + β`.
pub fn batch_norm_cached(x: &DenseMatrix, gamma: &[f64], beta: &[f64], eps: f64) -> (DenseMatrix, NormCache) {
    let t = x.transpose();
    let (d, n) = t.shape();
    let mut data = t.into_data();
    let inv_std: Vec<f64> = data.chunks_mut(n.max(1)).map(|col| standardize(col, eps)).collect();
    let xhat = DenseMatrix::new(d, n, data).expect("same size").transpose();
    let y = DenseMatrix::from_fn(n, d, |v, j| gamma[j] * xhat.get(v, j) + beta[j]);
    (y, NormCache { xhat, inv_std })
}

/// Per-node standardization over dimensions, then `γ·x̂ + β`.
pub fn layer_norm_cached(x: &DenseMatrix, gamma: &[f64], beta: &[f64], eps: f64) -> (DenseMatrix, NormCache) {
    let (n, d) = x.shape();
    let mut data = x.data().to_vec();
    let inv_std: Vec<f64> = data.chunks_mut(d).map(|row| standardize(row, eps)).collect();
    let xhat = DenseMatrix::new(n, d, data).expect("same size");
    let y = DenseMatrix::from_fn(n, d, |v, j| gamma[j] * xhat.get(v, j) + beta[j]);
    (y, NormCache { xhat, inv_std })
}

pub fn batch_norm_forward(x: &DenseMatrix, gamma: &[f64], beta: &[f64], eps: f64) -> DenseMatrix {
    batch_norm_cached(x, gamma, beta, eps).0
}

pub fn layer_norm_forward(x: &DenseMatrix, gamma: &[f64], beta: &[f64], eps: f64) -> DenseMatrix {
    layer_norm_cached(x, gamma, beta, eps).0
}

/// Backward of `x̂ = (x − μ)·inv` for one normalized group of size `m`.
fn standardize_backward(dxhat: &[f64], xhat: &[f64], inv: f64, out: &mut [f64]) {
    let m = dxhat.len() as f64;
    let sum: f64 = dxhat.iter().sum();
    let dot: f64 = dxhat.iter().zip(xhat).map(|(a, b)| a * b).sum();
    for ((o, &d), &h) in out.iter_mut().zip(dxhat).zip(xhat) {
        *o = inv / m * (m * d - sum - h * dot);
    }
}

/// Returns `(∂L/∂x, ∂L/∂γ, ∂L/∂β)`.
pub fn batch_norm_backward(dy: &DenseMatrix, cache: &NormCache, gamma: &[f64]) -> (DenseMatrix, Vec<f64>, Vec<f64>) {
    let (n, d) = dy.shape();
    let dyt = dy.transpose();
    let xt = cache.xhat.transpose();
    let mut dxt = vec![0.0; d * n];
    let mut dgamma = vec![0.0; d];
    let mut dbeta = vec![0.0; d];
    for j in 0..d {
        let g = dyt.row(j);
        let h = xt.row(j);
        dgamma[j] = g.iter().zip(h).map(|(a, b)| a * b).sum();
        dbeta[j] = g.iter().sum();
        let dxhat: Vec<f64> = g.iter().map(|x| x * gamma[j]).collect();
        standardize_backward(&dxhat, h, cache.inv_std[j], &mut dxt[j * n..(j + 1) * n]);
    }
    let dx = DenseMatrix::new(d, n, dxt).expect("same size").transpose();
    (dx, dgamma, dbeta)
}

pub fn layer_norm_backward(dy: &DenseMatrix, cache: &NormCache, gamma: &[f64]) -> (DenseMatrix, Vec<f64>, Vec<f64>) {
    let (n, d) = dy.shape();
    let mut dx = vec![0.0; n * d];
    let mut dgamma = vec![0.0; d];
    let mut dbeta = vec![0.0; d];
    let mut dxhat = vec![0.0; d];
    for v in 0..n {
        let g = dy.row(v);
        let h = cache.xhat.row(v);
        for j in 0..d {
            dgamma[j] += g[j] * h[j];
            dbeta[j] += g[j];
            dxhat[j] = g[j] * gamma[j];
        }
        standardize_backward(&dxhat, h, cache.inv_std[v], &mut dx[v * d..(v + 1) * d]);
    }
    (DenseMatrix::new(n, d, dx).expect("same size"), dgamma, dbeta)
}

/// `W·diag(s)`.
pub fn scale_columns(w: &DenseMatrix, s: &[f64]) -> DenseMatrix {
    DenseMatrix::from_fn(w.rows(), w.cols(), |a, j| w.get(a, j) * s[j])
}

pub fn add_bias(m: &mut DenseMatrix, b: &[f64]) {
    let q = m.cols();
    for row in m.data_mut().chunks_mut(q) {
        row.iter_mut().zip(b).for_each(|(x, y)| *x += y);
    }
}

fn check_layer(r_in: &DenseMatrix, adj: &SparseAdjacency, p: &LayerParams) -> Result<()> {
    if r_in.cols() != p.w.cols() || r_in.rows() != adj.n() || p.b.len() != p.w.rows() {
        return Err(GcnError::Shape(format!(
            "input {:?}, adjacency {}×{}, weight {:?}, bias {}",
            r_in.shape(),
            adj.n(),
            adj.n(),
            p.w.shape(),
            p.b.len()
        )));
    }
    Ok(())
}

/// `σ(Ãᵀ·R·Wᵀ + 𝟙bᵀ)` with node-major `R`.
pub fn gcn_forward(r_in: &DenseMatrix, adj: &SparseAdjacency, p: &LayerParams, act: Activation) -> Result<DenseMatrix> {
    check_layer(r_in, adj, p)?;
    let y = r_in.matmul(&p.w.transpose())?;
    let mut out = adj.transpose().matmul(&y);
    add_bias(&mut out, &p.b);
    Ok(out.map(|x| act.apply(x)))
}

/// GCN layer applied to `S∘R` for a given scale vector.
pub fn gcn_forward_scaled(
    r_in: &DenseMatrix,
    adj: &SparseAdjacency,
    p: &LayerParams,
    act: Activation,
    s: &[f64],
) -> Result<DenseMatrix> {
    check_layer(r_in, adj, p)?;
    let scaled = p_with_weight(p, scale_columns(&p.w, s));
    gcn_forward(r_in, adj, &scaled, act)
}

fn p_with_weight(p: &LayerParams, w: DenseMatrix) -> LayerParams {
    LayerParams {
        w,
        b: p.b.clone(),
        dr: None,
        norm: None,
    }
}

/// DrGCN layer: the Dr block scales the input dimensions, then a GCN layer.
pub fn drgcn_forward(
    r_in: &DenseMatrix,
    adj: &SparseAdjacency,
    p: &LayerParams,
    act: Activation,
    pool_weights: &[f64],
) -> Result<DenseMatrix> {
    let dr = p
        .dr
        .as_ref()
        .ok_or_else(|| GcnError::InvalidSpec("layer has no Dr parameters".into()))?;
    let s = dr_vector(r_in, dr, pool_weights)?;
    gcn_forward_scaled(r_in, adj, p, act, &s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_dim_dr_by_hand() {
        let dr = DrParams {
            w_g: DenseMatrix::from_rows(&[vec![1.0, -2.0]]).unwrap(),
            b_g: vec![0.5],
            w_s: DenseMatrix::from_rows(&[vec![2.0], vec![-1.0]]).unwrap(),
            b_s: vec![0.0, 0.25],
        };
        let r = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![3.0, 2.0]]).unwrap();
        // pooled r = (2, 1); a = 2 − 2 + 0.5 = 0.5; g = 0.5
        // s = (sigmoid(1), sigmoid(−0.25))
        let s = dr_vector(&r, &dr, &[0.5, 0.5]).unwrap();
        assert!((s[0] - 1.0 / (1.0 + (-1.0f64).exp())).abs() < 1e-15);
        assert!((s[1] - 1.0 / (1.0 + 0.25f64.exp())).abs() < 1e-15);
    }

    #[test]
    fn negative_pre_activation_goes_through_elu() {
        let dr = DrParams {
            w_g: DenseMatrix::from_rows(&[vec![-1.0]]).unwrap(),
            b_g: vec![0.0],
            w_s: DenseMatrix::from_rows(&[vec![1.0]]).unwrap(),
            b_s: vec![0.0],
        };
        let f = dr_from_pooled(vec![2.0], &dr);
        assert!((f.g[0] - ((-2.0f64).exp() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn batch_norm_two_nodes() {
        let x = DenseMatrix::from_rows(&[vec![0.0, 0.0], vec![2.0, 2.0]]).unwrap();
        let y = batch_norm_forward(&x, &[1.0, 1.0], &[0.0, 0.0], 1e-300);
        assert_eq!(y, DenseMatrix::from_rows(&[vec![-1.0, -1.0], vec![1.0, 1.0]]).unwrap());
        let c = DenseMatrix::from_fn(3, 2, |_, _| 4.0);
        assert!(layer_norm_forward(&c, &[1.0; 2], &[0.0; 2], 1e-5).data().iter().all(|&v| v == 0.0));
        assert!(batch_norm_forward(&c, &[1.0; 2], &[0.0; 2], 1e-5).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pool_weights_exclude_nodes() {
        let w = uniform_pool_weights(5, &[1, 3]);
        assert_eq!(w[1], 0.0);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
