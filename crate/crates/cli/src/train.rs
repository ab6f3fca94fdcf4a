use std::time::SystemTime;

use anyhow::{Context, Result};
use gcn::{aggregate, save_checkpoint, train_seeds, ActivationOrder, ModelSpec, NormMode, PoolScope, TrainConfig};
use graphstore::{bundle_checksums, load_bundle, AdjacencyVariant};
use serde::{Deserialize, Serialize};

use crate::args::{read_config, TrainArgs};
use crate::manifest::{ensure_dir, write_json, write_text, Envelope, RunManifest, Timestamps};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Gcn,
    DrGcn,
}

/// Resolved training settings: config file first, then flags on top.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub model: ModelKind,
    pub norm: Option<NormMode>,
    pub order: ActivationOrder,
    pub hidden: Vec<usize>,
    pub adjacency: AdjacencyVariant,
    pub pool_scope: PoolScope,
    pub row_normalize_features: bool,
    pub norm_eps: f64,
    pub train: TrainConfig,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            model: ModelKind::Gcn,
            norm: None,
            order: ActivationOrder::Post,
            hidden: vec![gcn::spec::DEFAULT_HIDDEN],
            adjacency: AdjacencyVariant::Renormalized,
            pool_scope: PoolScope::All,
            row_normalize_features: true,
            norm_eps: 1e-5,
            train: TrainConfig::default(),
        }
    }
}

impl TrainSettings {
    pub fn resolve(args: &TrainArgs) -> Result<Self> {
        let mut s: Self = read_config(args.common.config.as_ref())?;
        if let Some(m) = args.model {
            s.model = m;
        }
        if args.norm.is_some() {
            s.norm = args.norm;
        }
        if let Some(o) = args.order {
            s.order = o;
        }
        if let Some(h) = &args.hidden {
            s.hidden = h.clone();
        }
        if let Some(a) = args.adjacency {
            s.adjacency = a;
        }
        if let Some(p) = args.pool_scope {
            s.pool_scope = p;
        }
        if args.no_row_normalize {
            s.row_normalize_features = false;
        }
        if args.seeds.is_some() || args.seed.is_some() {
            let first = args.seed.unwrap_or(0);
            let count = args.seeds.unwrap_or(1) as u64;
            s.train.seeds = (first..first + count).collect();
        }
        let t = &mut s.train;
        t.max_epochs = args.epochs.unwrap_or(t.max_epochs);
        t.patience = args.patience.unwrap_or(t.patience.min(t.max_epochs));
        t.lr = args.lr.unwrap_or(t.lr);
        t.weight_decay = args.weight_decay.unwrap_or(t.weight_decay);
        t.dropout = args.dropout.unwrap_or(t.dropout);
        t.validate()?;
        Ok(s)
    }

    pub fn spec(&self, features: usize, classes: usize) -> Result<ModelSpec> {
        let norm = self.norm.unwrap_or(match self.model {
            ModelKind::Gcn => NormMode::None,
            ModelKind::DrGcn => NormMode::Dr,
        });
        let mut dims = vec![features];
        dims.extend(&self.hidden);
        dims.push(classes);
        let mut spec = ModelSpec::new(&dims, norm, self.order)?;
        spec.adjacency = self.adjacency;
        spec.pool_scope = self.pool_scope;
        spec.row_normalize_features = self.row_normalize_features;
        spec.norm_eps = self.norm_eps;
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Serialize)]
struct SeedSummary {
    seed: u64,
    selected_epoch: usize,
    best_val_acc: f64,
    test_acc: f64,
}

pub fn run(args: &TrainArgs) -> Result<()> {
    let started = SystemTime::now();
    let settings = TrainSettings::resolve(args)?;
    let graph = load_bundle(&args.bundle).with_context(|| format!("loading bundle {}", args.bundle.display()))?;
    let spec = settings.spec(graph.num_features(), graph.num_classes())?;
    let out = &args.common.out;
    ensure_dir(out)?;

    let mut manifest = RunManifest::new("train", &settings, settings.train.seeds.clone())?;
    manifest.bundle_checksums = bundle_checksums(&args.bundle)?;
    for &seed in &settings.train.seeds {
        manifest.outputs.push(format!("report_seed{seed}.json").into());
        manifest.outputs.push(format!("curve_seed{seed}.csv").into());
        if !args.no_checkpoints {
            manifest.outputs.push(format!("model_seed{seed}.ckpt").into());
        }
    }
    manifest.outputs.push("aggregate.json".into());

    let runs = train_seeds(&graph, &spec, &settings.train, args.common.jobs)?;
    for run in &runs {
        let seed = run.report.seed;
        #[derive(Serialize)]
        struct Body<'a> {
            report: &'a gcn::TrainReport,
        }
        let stripped = run.report.without_timing();
        write_json(
            &out.join(format!("report_seed{seed}.json")),
            &Envelope {
                manifest: &manifest,
                body: Body { report: &stripped },
                timing: &run.report.timing,
            },
        )?;
        write_text(&out.join(format!("curve_seed{seed}.csv")), &run.report.curve_csv())?;
        if !args.no_checkpoints {
            save_checkpoint(&run.model, out.join(format!("model_seed{seed}.ckpt")))?;
        }
        eprintln!(
            "seed {seed}: epoch {} val {:.4} test {:.4}",
            run.report.selected_epoch, run.report.best_val_acc, run.report.test_acc
        );
    }
    let reports: Vec<_> = runs.into_iter().map(|r| r.report).collect();
    let agg = aggregate(&reports);
    #[derive(Serialize)]
    struct Body {
        aggregate: gcn::Aggregate,
        runs: Vec<SeedSummary>,
    }
    let summaries = reports
        .iter()
        .map(|r| SeedSummary {
            seed: r.seed,
            selected_epoch: r.selected_epoch,
            best_val_acc: r.best_val_acc,
            test_acc: r.test_acc,
        })
        .collect();
    println!(
        "test accuracy {:.2} ± {:.2} over {} run(s)",
        100.0 * agg.mean_test_acc,
        100.0 * agg.std_test_acc,
        agg.runs
    );
    write_json(
        &out.join("aggregate.json"),
        &Envelope {
            manifest: &manifest,
            body: Body {
                aggregate: agg,
                runs: summaries,
            },
            timing: Timestamps::since(started),
        },
    )
}
