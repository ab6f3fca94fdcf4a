use std::collections::BTreeMap;

use anyhow::{Context, Result};
use graphstore::{bundle_checksums, degrees, load_bundle, read_meta, BundleMeta};
use serde::Serialize;

use crate::args::ConvertCheckArgs;
use crate::exit::VerificationFailed;
use crate::manifest::{ensure_dir, write_json, RunManifest};

#[derive(Debug, Serialize)]
pub struct BundleReport {
    pub meta: BundleMeta,
    pub splits: [usize; 3],
    pub isolated_nodes: usize,
    pub checksums: BTreeMap<String, String>,
    pub failures: Vec<String>,
}

pub fn run(args: &ConvertCheckArgs) -> Result<()> {
    let graph = load_bundle(&args.bundle).with_context(|| format!("checking bundle {}", args.bundle.display()))?;
    let meta = read_meta(&args.bundle)?;
    let splits = [graph.train().len(), graph.val().len(), graph.test().len()];
    let mut failures = Vec::new();
    if let Some(want) = &args.expect_splits {
        if want.as_slice() != splits {
            failures.push(format!("split sizes {splits:?}, expected {want:?}"));
        }
    }
    let report = BundleReport {
        meta,
        splits,
        isolated_nodes: degrees(&graph).iter().filter(|&&d| d == 0).count(),
        checksums: bundle_checksums(&args.bundle)?,
        failures,
    };
    ensure_dir(&args.out)?;
    let mut manifest = RunManifest::new("convert-check", &args.bundle, Vec::new())?;
    manifest.bundle_checksums = report.checksums.clone();
    manifest.outputs = vec!["bundle_check.json".into()];
    #[derive(Serialize)]
    struct Out<'a> {
        manifest: &'a RunManifest,
        report: &'a BundleReport,
    }
    write_json(
        &args.out.join("bundle_check.json"),
        &Out {
            manifest: &manifest,
            report: &report,
        },
    )?;
    let m = &report.meta;
    println!("n {} d {} classes {} edges {} splits {:?}", m.n, m.d, m.classes, m.edges, splits);
    for (file, sum) in &report.checksums {
        println!("{sum}  {file}");
    }
    if !report.failures.is_empty() {
        return Err(VerificationFailed {
            failures: report.failures,
        })
        .context("bundle loads but does not match expectations");
    }
    Ok(())
}
