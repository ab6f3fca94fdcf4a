use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("missing bundle file {0}")]
    MissingFile(PathBuf),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed meta.json: {0}")]
    BadMeta(String),
    #[error("{file}: expected {expected} bytes, found {found}")]
    SizeMismatch {
        file: String,
        expected: u64,
        found: u64,
    },
    #[error("{what}: index {index} out of range (n = {n})")]
    IndexOutOfRange { what: String, index: u64, n: usize },
    #[error("node {node} has label {label} but there are {classes} classes")]
    LabelOutOfRange { node: usize, label: u16, classes: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(u32),
    #[error("edge ({0}, {1}) is not stored with i < j")]
    EdgeOrientation(u32, u32),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(u32, u32),
    #[error("{0} is not sorted ascending")]
    Unsorted(String),
    #[error("splits {a} and {b} overlap at node {node}")]
    OverlappingSplits { a: String, b: String, node: u32 },
    #[error("feature matrix has {got} rows, expected {n}")]
    FeatureShape { n: usize, got: usize },
    #[error("non-finite feature at node {node}")]
    NonFiniteFeature { node: usize },
}

impl GraphError {
    /// Stable short code per error kind, used in validation reports.
    pub fn code(&self) -> &'static str {
        match self {
            GraphError::MissingFile(_) => "missing-file",
            GraphError::Io { .. } => "io",
            GraphError::BadMeta(_) => "bad-meta",
            GraphError::SizeMismatch { .. } => "size-mismatch",
            GraphError::IndexOutOfRange { .. } => "index-out-of-range",
            GraphError::LabelOutOfRange { .. } => "label-out-of-range",
            GraphError::SelfLoop(_) => "self-loop",
            GraphError::EdgeOrientation(..) => "edge-orientation",
            GraphError::DuplicateEdge(..) => "duplicate-edge",
            GraphError::Unsorted(_) => "unsorted",
            GraphError::OverlappingSplits { .. } => "split-overlap",
            GraphError::FeatureShape { .. } => "feature-shape",
            GraphError::NonFiniteFeature { .. } => "non-finite-feature",
        }
    }
}
