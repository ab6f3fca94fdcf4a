use std::time::Instant;

use graphstore::Graph;
use numkit::RngStream;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::kmeasure::{measure_k_with_context, LayerK};
use crate::loss::{accuracy, softmax_cross_entropy, LossParts};
use crate::model::{GraphContext, Model};
use crate::optim::{adam_step, AdamConfig, AdamState};
use crate::spec::ModelSpec;
use crate::{GcnError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seeds: Vec<u64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            weight_decay: 5e-4,
            dropout: 0.5,
            max_epochs: 800,
            patience: 100,
            seeds: vec![0],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(GcnError::InvalidConfig(m));
        if !(self.lr > 0.0) || !(self.adam_eps > 0.0) {
            return bad("learning rate and Adam epsilon must be > 0".into());
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam betas must lie in [0, 1)".into());
        }
        if !(self.weight_decay >= 0.0) {
            return bad("weight decay must be >= 0".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if self.max_epochs == 0 || self.patience == 0 || self.patience > self.max_epochs {
            return bad("need 0 < patience <= max_epochs".into());
        }
        if self.seeds.is_empty() {
            return bad("no seeds".into());
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.adam_eps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    pub test_acc: f64,
}

/// Wall-clock measurements, kept apart so the rest of a report is reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub epoch_seconds: Vec<f64>,
    pub total_seconds: f64,
}

impl Timing {
    pub fn median_epoch_seconds(&self) -> f64 {
        let mut v = self.epoch_seconds.clone();
        v.sort_by(|a, b| a.total_cmp(b));
        v.get(v.len() / 2).copied().unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub seed: u64,
    pub spec: ModelSpec,
    pub config: TrainConfig,
    pub epochs: Vec<EpochRecord>,
    /// First epoch reaching the best validation accuracy.
    pub selected_epoch: usize,
    pub best_val_acc: f64,
    pub test_acc: f64,
    pub selected_loss: LossParts,
    pub k_per_layer: Vec<LayerK>,
    pub stopped_early: bool,
    pub timing: Timing,
}

impl TrainReport {
    /// Per-epoch curve: `epoch,train_loss,val_acc,test_acc`.
    pub fn curve_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_acc,test_acc\n");
        for e in &self.epochs {
            out.push_str(&format!("{},{},{},{}\n", e.epoch, e.train_loss, e.val_acc, e.test_acc));
        }
        out
    }

    /// The report without wall-clock data.
    pub fn without_timing(&self) -> Self {
        Self {
            timing: Timing {
                epoch_seconds: Vec::new(),
                total_seconds: 0.0,
            },
            ..self.clone()
        }
    }
}

pub struct TrainOutcome {
    pub report: TrainReport,
    /// Parameters at the selected epoch.
    pub model: Model,
}

pub fn train(graph: &Graph, spec: &ModelSpec, cfg: &TrainConfig, seed: u64) -> Result<TrainOutcome> {
    let ctx = GraphContext::new(graph, spec)?;
    train_with_context(&ctx, spec, cfg, seed)
}

pub fn train_with_context(ctx: &GraphContext, spec: &ModelSpec, cfg: &TrainConfig, seed: u64) -> Result<TrainOutcome> {
    cfg.validate()?;
    if ctx.train.is_empty() || ctx.val.is_empty() || ctx.test.is_empty() {
        return Err(GcnError::EmptyMask("train/val/test"));
    }
    let root = RngStream::new(seed);
    let mut model = Model::new(spec.clone(), &mut root.substream(0))?;
    let mut drop_rng = root.substream(1);
    let mut adam = AdamState::new(&model.params);
    let adam_cfg = cfg.adam();

    let started = Instant::now();
    let mut epochs = Vec::new();
    let mut epoch_seconds = Vec::new();
    let mut best: Option<(usize, f64, f64, Model)> = None;
    let mut since_best = 0;
    let mut stopped_early = false;
    for epoch in 1..=cfg.max_epochs {
        let t0 = Instant::now();
        let diverged = |loss: f64| GcnError::Divergence { epoch, loss };
        let (loss, grads) = model
            .loss_and_grad(ctx, &ctx.train, cfg.weight_decay, Some((cfg.dropout, &mut drop_rng)))
            .map_err(|e| match e {
                GcnError::Divergence { loss, .. } => diverged(loss),
                other => other,
            })?;
        if !loss.total.is_finite() {
            return Err(diverged(loss.total));
        }
        adam_step(&mut model.params, &grads, &mut adam, &adam_cfg);
        if !model.params.is_finite() {
            return Err(diverged(f64::NAN));
        }
        let logits = model.logits(ctx).map_err(|_| diverged(f64::NAN))?;
        let (val_loss, _) = softmax_cross_entropy(&logits, &ctx.labels, &ctx.val)?;
        let record = EpochRecord {
            epoch,
            train_loss: loss.total,
            train_acc: accuracy(&logits, &ctx.labels, &ctx.train)?,
            val_loss,
            val_acc: accuracy(&logits, &ctx.labels, &ctx.val)?,
            test_acc: accuracy(&logits, &ctx.labels, &ctx.test)?,
        };
        epoch_seconds.push(t0.elapsed().as_secs_f64());
        let improved = best.as_ref().is_none_or(|b| record.val_acc > b.1);
        if improved {
            best = Some((epoch, record.val_acc, record.test_acc, model.clone()));
            since_best = 0;
        } else {
            since_best += 1;
        }
        epochs.push(record);
        if since_best >= cfg.patience {
            stopped_early = epoch < cfg.max_epochs;
            break;
        }
    }
    let (selected_epoch, best_val_acc, test_acc, best_model) = best.expect("at least one epoch");
    let selected_loss = best_model.loss(ctx, &ctx.train, cfg.weight_decay)?;
    let k_per_layer = if spec.dr_layers().is_empty() {
        Vec::new()
    } else {
        measure_k_with_context(&best_model, ctx)?
    };
    let report = TrainReport {
        seed,
        spec: spec.clone(),
        config: cfg.clone(),
        epochs,
        selected_epoch,
        best_val_acc,
        test_acc,
        selected_loss,
        k_per_layer,
        stopped_early,
        timing: Timing {
            epoch_seconds,
            total_seconds: started.elapsed().as_secs_f64(),
        },
    };
    Ok(TrainOutcome {
        report,
        model: best_model,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub runs: usize,
    pub mean_test_acc: f64,
    /// Sample standard deviation (zero for a single run).
    pub std_test_acc: f64,
    pub mean_selected_epoch: f64,
    /// Mean K per Dr layer across runs.
    pub mean_k_per_layer: Vec<f64>,
}

pub fn aggregate(reports: &[TrainReport]) -> Aggregate {
    let n = reports.len() as f64;
    let accs: Vec<f64> = reports.iter().map(|r| r.test_acc).collect();
    let mean = accs.iter().sum::<f64>() / n;
    let std = if reports.len() > 1 {
        (accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let layers = reports.first().map_or(0, |r| r.k_per_layer.len());
    let mean_k = (0..layers)
        .map(|l| reports.iter().map(|r| r.k_per_layer[l].k).sum::<f64>() / n)
        .collect();
    Aggregate {
        runs: reports.len(),
        mean_test_acc: mean,
        std_test_acc: std,
        mean_selected_epoch: reports.iter().map(|r| r.selected_epoch as f64).sum::<f64>() / n,
        mean_k_per_layer: mean_k,
    }
}

/// One run per seed in `cfg.seeds`, at most `jobs` at a time. Results come
/// back in seed order.
pub fn train_seeds(graph: &Graph, spec: &ModelSpec, cfg: &TrainConfig, jobs: usize) -> Result<Vec<TrainOutcome>> {
    let ctx = GraphContext::new(graph, spec)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| GcnError::InvalidConfig(e.to_string()))?;
    pool.install(|| {
        cfg.seeds
            .par_iter()
            .map(|&seed| train_with_context(&ctx, spec, cfg, seed))
            .collect()
    })
}
