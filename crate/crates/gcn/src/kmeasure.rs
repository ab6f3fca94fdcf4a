use graphstore::Graph;
use meanfield::k_measure;
use numkit::{DenseMatrix, SymmetricMatrix};
use serde::{Deserialize, Serialize};

use crate::model::{GraphContext, Model};
use crate::{GcnError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerK {
    pub layer: usize,
    pub dim: usize,
    pub k: f64,
}

/// Covariance over nodes (rows) of `z`, normalized by `n`.
pub fn node_covariance(z: &DenseMatrix) -> Result<SymmetricMatrix> {
    let n = z.rows() as f64;
    let second = z.t_matmul(z)?;
    let mean: Vec<f64> = z.col_sums().into_iter().map(|x| x / n).collect();
    Ok(SymmetricMatrix::from_upper(z.cols(), |i, j| second.get(i, j) / n - mean[i] * mean[j]))
}

/// K of every Dr layer, from the covariance of the Dr block's input over all
/// nodes and the layer's current scale vector.
pub fn measure_k_with_context(model: &Model, ctx: &GraphContext) -> Result<Vec<LayerK>> {
    let dr_layers = model.spec.dr_layers();
    if dr_layers.is_empty() {
        return Err(GcnError::NoDrLayers);
    }
    let fwd = model.forward(ctx, None)?;
    dr_layers
        .into_iter()
        .map(|l| {
            let cache = &fwd.layers[l];
            let s = &cache.dr.as_ref().expect("Dr layer caches s").s;
            let z = cache.linear_input();
            let c = node_covariance(z)?;
            Ok(LayerK {
                layer: l,
                dim: z.cols(),
                k: k_measure(&c, s)?,
            })
        })
        .collect()
}

pub fn measure_k_per_layer(model: &Model, graph: &Graph) -> Result<Vec<LayerK>> {
    let ctx = GraphContext::new(graph, &model.spec)?;
    measure_k_with_context(model, &ctx)
}
