use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

#[derive(Debug, Parser)]
#[command(name = "drgcn", version, about = "Dimensionally reweighted GCN training and mean-field analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train GCN / Dr-GCN models on a bundle, one run per seed.
    Train(TrainArgs),
    /// Fixed point, spectrum and scaling checks of the covariance map.
    Meanfield(MeanfieldArgs),
    /// Per-layer K of a trained Dr checkpoint.
    MeasureK(MeasureKArgs),
    /// Validate a bundle and print its checksums.
    ConvertCheck(ConvertCheckArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Directory for every artifact of the run.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker jobs for independent seeds or trials.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Parses a value through its serde name, so flags and config files agree.
pub fn serde_name<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    /// gcn or dr-gcn.
    #[arg(long, value_parser = serde_name::<crate::train::ModelKind>)]
    pub model: Option<crate::train::ModelKind>,
    /// Overrides the model's norm: none, batch, layer, dr, dr+layer.
    #[arg(long, value_parser = serde_name::<gcn::NormMode>)]
    pub norm: Option<gcn::NormMode>,
    /// post or pre.
    #[arg(long, value_parser = serde_name::<gcn::ActivationOrder>)]
    pub order: Option<gcn::ActivationOrder>,
    /// Hidden widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    /// mean, symmetric, self-loop-symmetric or renormalized.
    #[arg(long, value_parser = serde_name::<graphstore::AdjacencyVariant>)]
    pub adjacency: Option<graphstore::AdjacencyVariant>,
    /// all or exclude-test.
    #[arg(long, value_parser = serde_name::<gcn::PoolScope>)]
    pub pool_scope: Option<gcn::PoolScope>,
    #[arg(long)]
    pub no_row_normalize: bool,
    /// Number of runs; seeds are consecutive from --seed.
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    /// Skip writing per-seed checkpoints.
    #[arg(long)]
    pub no_checkpoints: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Check {
    Bsb1,
    Theorem1,
    Theorem2,
    Theorem3,
}

#[derive(Debug, Args)]
pub struct MeanfieldArgs {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long = "sigma-b2")]
    pub sigma_b2: Option<f64>,
    /// Scaling vector for the K / growth identity, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub s: Option<Vec<f64>>,
    /// Checks that decide the exit code. Defaults to bsb1,theorem3.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub verify: Option<Vec<Check>>,
    /// Random covariances for theorem1 / theorem2 and random starts for bsb1.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub fd_step: Option<f64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Size of the G perturbation for the growth trace.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct MeasureKArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub bundle: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ConvertCheckArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    /// Required train,val,test sizes.
    #[arg(long, value_delimiter = ',')]
    pub expect_splits: Option<Vec<usize>>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

pub fn read_config<T: DeserializeOwned + Default>(path: Option<&PathBuf>) -> anyhow::Result<T> {
    use anyhow::Context;
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
        }
    }
}
