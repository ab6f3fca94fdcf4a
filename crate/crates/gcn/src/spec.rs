use graphstore::AdjacencyVariant;
use serde::{Deserialize, Serialize};

use crate::{GcnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Elu,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Elu => elu(x),
            Activation::Identity => x,
        }
    }

    /// Derivative at pre-activation `x`.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Elu => {
                if x > 0.0 {
                    1.0
                } else {
                    x.exp()
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

pub fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// What happens to a layer's input before the linear map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormMode {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "batch")]
    Batch,
    #[serde(rename = "layer")]
    Layer,
    #[serde(rename = "dr")]
    Dr,
    /// Layer norm, then a Dr block fed by the normalized input.
    #[serde(rename = "dr+layer")]
    DrLayer,
}

impl NormMode {
    pub fn has_dr(self) -> bool {
        matches!(self, NormMode::Dr | NormMode::DrLayer)
    }

    pub fn has_affine(self) -> bool {
        matches!(self, NormMode::Batch | NormMode::Layer | NormMode::DrLayer)
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "none" => NormMode::None,
            "batch" => NormMode::Batch,
            "layer" => NormMode::Layer,
            "dr" => NormMode::Dr,
            "dr+layer" => NormMode::DrLayer,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationOrder {
    /// `σ(Ãᵀ·(S∘H)·Wᵀ + b)`.
    Post,
    /// `Ãᵀ·σ(S∘H)·Wᵀ + b`.
    Pre,
}

/// Which nodes the Dr block pools over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoolScope {
    All,
    ExcludeTest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
    pub norm: NormMode,
}

impl LayerSpec {
    pub fn g_dim(&self) -> usize {
        g_dim(self.in_dim)
    }
}

/// Width of the Dr encoder: the integer closest to `√in`.
pub fn g_dim(in_dim: usize) -> usize {
    ((in_dim as f64).sqrt().round() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub layers: Vec<LayerSpec>,
    pub order: ActivationOrder,
    pub adjacency: AdjacencyVariant,
    pub pool_scope: PoolScope,
    pub row_normalize_features: bool,
    pub norm_eps: f64,
}

pub const DEFAULT_HIDDEN: usize = 64;

impl ModelSpec {
    /// Layers `dims[0] → dims[1] → …`, every layer with the same `norm`.
    /// Hidden layers use ReLU; the last layer feeds the softmax.
    pub fn new(dims: &[usize], norm: NormMode, order: ActivationOrder) -> Result<Self> {
        if dims.len() < 2 {
            return Err(GcnError::InvalidSpec("need at least input and output dims".into()));
        }
        let n = dims.len() - 1;
        let layers = (0..n)
            .map(|l| {
                let activation = match order {
                    ActivationOrder::Post if l + 1 < n => Activation::Relu,
                    ActivationOrder::Pre if l > 0 => Activation::Relu,
                    _ => Activation::Identity,
                };
                LayerSpec {
                    in_dim: dims[l],
                    out_dim: dims[l + 1],
                    activation,
                    norm,
                }
            })
            .collect();
        let spec = Self {
            layers,
            order,
            adjacency: AdjacencyVariant::Renormalized,
            pool_scope: PoolScope::All,
            row_normalize_features: true,
            norm_eps: 1e-5,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gcn(features: usize, hidden: usize, classes: usize) -> Result<Self> {
        Self::new(&[features, hidden, classes], NormMode::None, ActivationOrder::Post)
    }

    pub fn dr_gcn(features: usize, hidden: usize, classes: usize) -> Result<Self> {
        Self::new(&[features, hidden, classes], NormMode::Dr, ActivationOrder::Post)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(GcnError::InvalidSpec("no layers".into()));
        }
        for (l, w) in self.layers.windows(2).enumerate() {
            if w[0].out_dim != w[1].in_dim {
                return Err(GcnError::InvalidSpec(format!(
                    "layer {l} outputs {} dims but layer {} expects {}",
                    w[0].out_dim,
                    l + 1,
                    w[1].in_dim
                )));
            }
        }
        if self.layers.iter().any(|l| l.in_dim == 0 || l.out_dim == 0) {
            return Err(GcnError::InvalidSpec("zero-width layer".into()));
        }
        if !(self.norm_eps > 0.0) {
            return Err(GcnError::InvalidSpec("norm_eps must be > 0".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn num_classes(&self) -> usize {
        self.layers.last().expect("validated").out_dim
    }

    pub fn dr_layers(&self) -> Vec<usize> {
        (0..self.layers.len()).filter(|&l| self.layers[l].norm.has_dr()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_dim_rounds_square_root() {
        assert_eq!(g_dim(1433), 38);
        assert_eq!(g_dim(64), 8);
        assert_eq!(g_dim(500), 22);
        assert_eq!(g_dim(1), 1);
    }

    #[test]
    fn constructors_wire_activations() {
        let s = ModelSpec::gcn(10, 4, 3).unwrap();
        assert_eq!(s.layers[0].activation, Activation::Relu);
        assert_eq!(s.layers[1].activation, Activation::Identity);
        let p = ModelSpec::new(&[10, 4, 3], NormMode::Dr, ActivationOrder::Pre).unwrap();
        assert_eq!(p.layers[0].activation, Activation::Identity);
        assert_eq!(p.layers[1].activation, Activation::Relu);
        assert_eq!(serde_json::to_string(&NormMode::DrLayer).unwrap(), "\"dr+layer\"");
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }
}
