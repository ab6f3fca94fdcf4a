use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything needed to re-run a command and get the same report back.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub artifact_version: String,
    pub rng: String,
    pub bundle_checksums: BTreeMap<String, String>,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str, config: &impl Serialize, seeds: Vec<u64>) -> Result<Self> {
        Ok(Self {
            command: command.into(),
            config: serde_json::to_value(config)?,
            seeds,
            artifact_version: ARTIFACT_VERSION.into(),
            rng: numkit::RngStream::ALGORITHM.into(),
            bundle_checksums: BTreeMap::new(),
            outputs: Vec::new(),
        })
    }
}

/// Wall-clock data, kept out of the reproducible part of a report.
#[derive(Debug, Clone, Serialize)]
pub struct Timestamps {
    pub started_unix: f64,
    pub elapsed_seconds: f64,
}

impl Timestamps {
    pub fn since(started: SystemTime) -> Self {
        let unix = started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
        Self {
            started_unix: unix,
            elapsed_seconds: started.elapsed().map(|d| d.as_secs_f64()).unwrap_or(0.0),
        }
    }
}

#[derive(Serialize)]
pub struct Envelope<'a, T: Serialize, W: Serialize> {
    pub manifest: &'a RunManifest,
    #[serde(flatten)]
    pub body: T,
    pub timing: W,
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}
