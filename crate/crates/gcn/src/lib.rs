//! Graph convolution layers with optional dimensional reweighting (Dr), a
//! hand-written backward pass, Adam training and layer-wise K measurement.
//!
//! Representations are node-major (`n × dim`), so a layer computes
//! `σ(Ãᵀ·(S∘H)·Wᵀ + 𝟙bᵀ)`.

pub mod checkpoint;
mod error;
pub mod kmeasure;
pub mod layers;
pub mod loss;
pub mod model;
pub mod optim;
pub mod params;
pub mod spec;
pub mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use error::{GcnError, Result};
pub use kmeasure::{measure_k_per_layer, measure_k_with_context, LayerK};
pub use layers::{batch_norm_forward, dr_vector, drgcn_forward, gcn_forward, layer_norm_forward};
pub use loss::{softmax_cross_entropy, LossParts};
pub use model::{evaluate, GraphContext, Model};
pub use optim::{adam_step, AdamConfig, AdamState};
pub use params::{DrParams, LayerParams, NormParams, Params};
pub use spec::{Activation, ActivationOrder, LayerSpec, ModelSpec, NormMode, PoolScope};
pub use train::{aggregate, train, train_seeds, train_with_context, Aggregate, TrainConfig, TrainOutcome, TrainReport};
