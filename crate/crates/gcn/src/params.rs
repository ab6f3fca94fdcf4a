use numkit::{DenseMatrix, RngStream};
use serde::{Deserialize, Serialize};

use crate::spec::{LayerSpec, ModelSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrParams {
    /// `g_dim × in`.
    pub w_g: DenseMatrix,
    pub b_g: Vec<f64>,
    /// `in × g_dim`.
    pub w_s: DenseMatrix,
    pub b_s: Vec<f64>,
}

impl DrParams {
    pub fn zeros(in_dim: usize, g_dim: usize) -> Self {
        Self {
            w_g: DenseMatrix::zeros(g_dim, in_dim),
            b_g: vec![0.0; g_dim],
            w_s: DenseMatrix::zeros(in_dim, g_dim),
            b_s: vec![0.0; in_dim],
        }
    }

    pub fn num_params(&self) -> usize {
        self.w_g.data().len() + self.b_g.len() + self.w_s.data().len() + self.b_s.len()
    }
}

/// Affine parameters of batch or layer norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    /// `out × in`.
    pub w: DenseMatrix,
    pub b: Vec<f64>,
    pub dr: Option<DrParams>,
    pub norm: Option<NormParams>,
}

impl LayerParams {
    pub fn zeros(spec: &LayerSpec) -> Self {
        Self {
            w: DenseMatrix::zeros(spec.out_dim, spec.in_dim),
            b: vec![0.0; spec.out_dim],
            dr: spec.norm.has_dr().then(|| DrParams::zeros(spec.in_dim, spec.g_dim())),
            norm: spec.norm.has_affine().then(|| NormParams {
                gamma: vec![0.0; spec.in_dim],
                beta: vec![0.0; spec.in_dim],
            }),
        }
    }
}

/// Shape and regularization flag of one parameter block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockInfo {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub decay: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub layers: Vec<LayerParams>,
}

fn glorot(m: &mut DenseMatrix, rng: &mut RngStream) {
    let (rows, cols) = m.shape();
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    for x in m.data_mut() {
        *x = rng.uniform_range(-limit, limit);
    }
}

impl Params {
    pub fn zeros(spec: &ModelSpec) -> Self {
        Self {
            layers: spec.layers.iter().map(LayerParams::zeros).collect(),
        }
    }

    /// Glorot-uniform weights, zero biases, unit norm gains.
    pub fn init(spec: &ModelSpec, rng: &mut RngStream) -> Self {
        let mut p = Self::zeros(spec);
        for layer in &mut p.layers {
            glorot(&mut layer.w, rng);
            if let Some(dr) = &mut layer.dr {
                glorot(&mut dr.w_g, rng);
                glorot(&mut dr.w_s, rng);
            }
            if let Some(n) = &mut layer.norm {
                n.gamma.iter_mut().for_each(|g| *g = 1.0);
            }
        }
        p
    }

    /// Blocks in declaration order.
    pub fn block_info(&self) -> Vec<BlockInfo> {
        let mut out = Vec::new();
        let mut push = |name: String, rows: usize, cols: usize, decay: bool| {
            out.push(BlockInfo { name, rows, cols, decay })
        };
        for (l, layer) in self.layers.iter().enumerate() {
            push(format!("layer{l}.w"), layer.w.rows(), layer.w.cols(), true);
            push(format!("layer{l}.b"), 1, layer.b.len(), false);
            if let Some(dr) = &layer.dr {
                push(format!("layer{l}.dr.w_g"), dr.w_g.rows(), dr.w_g.cols(), true);
                push(format!("layer{l}.dr.b_g"), 1, dr.b_g.len(), false);
                push(format!("layer{l}.dr.w_s"), dr.w_s.rows(), dr.w_s.cols(), true);
                push(format!("layer{l}.dr.b_s"), 1, dr.b_s.len(), false);
            }
            if let Some(n) = &layer.norm {
                push(format!("layer{l}.norm.gamma"), 1, n.gamma.len(), false);
                push(format!("layer{l}.norm.beta"), 1, n.beta.len(), false);
            }
        }
        out
    }

    pub fn blocks(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for layer in &self.layers {
            out.push(layer.w.data());
            out.push(&layer.b);
            if let Some(dr) = &layer.dr {
                out.extend([dr.w_g.data(), &dr.b_g[..], dr.w_s.data(), &dr.b_s[..]]);
            }
            if let Some(n) = &layer.norm {
                out.extend([&n.gamma[..], &n.beta[..]]);
            }
        }
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for layer in &mut self.layers {
            out.push(layer.w.data_mut());
            out.push(&mut layer.b);
            if let Some(dr) = &mut layer.dr {
                out.push(dr.w_g.data_mut());
                out.push(&mut dr.b_g);
                out.push(dr.w_s.data_mut());
                out.push(&mut dr.b_s);
            }
            if let Some(n) = &mut layer.norm {
                out.push(&mut n.gamma);
                out.push(&mut n.beta);
            }
        }
        out
    }

    pub fn num_params(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    /// `Σ ‖W‖²` over all regularized blocks.
    pub fn decay_norm_sq(&self) -> f64 {
        self.block_info()
            .iter()
            .zip(self.blocks())
            .filter(|(info, _)| info.decay)
            .map(|(_, b)| b.iter().map(|x| x * x).sum::<f64>())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|x| x.is_finite()))
    }
}
