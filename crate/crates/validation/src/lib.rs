//! Fixtures for the acceptance suite: dataset lookup, a Pubmed-shaped
//! synthetic graph and multi-seed accuracy runs.

use std::path::{Path, PathBuf};

use gcn::{train_seeds, Aggregate, ModelSpec, TrainConfig, TrainReport};
use graphstore::synthetic::{random_graph, SplitSizes};
use graphstore::{load_bundle, Graph};

pub const DATA_DIR_VAR: &str = "DRGCN_DATA_DIR";

pub fn data_dir() -> PathBuf {
    match std::env::var_os(DATA_DIR_VAR) {
        Some(d) => PathBuf::from(d),
        None => {
            let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
            crate_dir.ancestors().nth(2).unwrap_or(crate_dir).join("data")
        }
    }
}

/// Loads `<data dir>/<name>`, or explains why it could not.
pub fn dataset(name: &str) -> Result<Graph, String> {
    let dir = data_dir().join(name);
    if !dir.join("meta.json").is_file() {
        return Err(format!("blocked: bundle not found at {}", dir.display()));
    }
    load_bundle(&dir).map_err(|e| format!("bundle {} is invalid: {e}", dir.display()))
}

/// Same node count, feature width, class count, edge count and feature
/// density as Pubmed, with the semi-supervised split sizes.
pub fn pubmed_shaped(seed: u64) -> Graph {
    let sizes = SplitSizes {
        train: 60,
        val: 500,
        test: 1000,
    };
    random_graph(19_717, 44_324, 500, 3, 0.1, sizes, seed)
}

pub struct SeedRuns {
    pub reports: Vec<TrainReport>,
    pub aggregate: Aggregate,
    pub max_run_seconds: f64,
}

pub fn run_seeds(graph: &Graph, spec: &ModelSpec, seeds: usize) -> Result<SeedRuns, String> {
    let cfg = TrainConfig {
        seeds: (0..seeds as u64).collect(),
        ..TrainConfig::default()
    };
    let runs = train_seeds(graph, spec, &cfg, 1).map_err(|e| e.to_string())?;
    let reports: Vec<TrainReport> = runs.into_iter().map(|r| r.report).collect();
    Ok(SeedRuns {
        aggregate: gcn::aggregate(&reports),
        max_run_seconds: reports.iter().map(|r| r.timing.total_seconds).fold(0.0, f64::max),
        reports,
    })
}
