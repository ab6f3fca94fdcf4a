use std::time::SystemTime;

use anyhow::{Context, Result};
use gcn::{load_checkpoint, measure_k_per_layer, LayerK};
use graphstore::{bundle_checksums, load_bundle};
use serde::Serialize;

use crate::args::MeasureKArgs;
use crate::manifest::{ensure_dir, write_json, write_text, Envelope, RunManifest, Timestamps};

pub fn k_csv(rows: &[LayerK]) -> String {
    let mut out = String::from("layer,dim,k\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.layer, r.dim, r.k));
    }
    out
}

pub fn run(args: &MeasureKArgs) -> Result<()> {
    let started = SystemTime::now();
    let model = load_checkpoint(&args.checkpoint)?;
    let graph = load_bundle(&args.bundle).with_context(|| format!("loading bundle {}", args.bundle.display()))?;
    let rows = measure_k_per_layer(&model, &graph)?;
    let out = &args.common.out;
    ensure_dir(out)?;

    #[derive(Serialize)]
    struct Config<'a> {
        checkpoint: &'a std::path::Path,
        bundle: &'a std::path::Path,
        spec: &'a gcn::ModelSpec,
    }
    let mut manifest = RunManifest::new(
        "measure-k",
        &Config {
            checkpoint: &args.checkpoint,
            bundle: &args.bundle,
            spec: &model.spec,
        },
        Vec::new(),
    )?;
    manifest.bundle_checksums = bundle_checksums(&args.bundle)?;
    manifest.outputs = vec!["k.csv".into(), "k.json".into()];
    let csv = k_csv(&rows);
    write_text(&out.join("k.csv"), &csv)?;
    #[derive(Serialize)]
    struct Body<'a> {
        layers: &'a [LayerK],
    }
    write_json(
        &out.join("k.json"),
        &Envelope {
            manifest: &manifest,
            body: Body { layers: &rows },
            timing: Timestamps::since(started),
        },
    )?;
    print!("{csv}");
    Ok(())
}
