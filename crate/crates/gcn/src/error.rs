use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GcnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("empty {0} index set")]
    EmptyMask(&'static str),
    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Divergence { epoch: usize, loss: f64 },
    #[error("model has no Dr layers")]
    NoDrLayers,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Num(#[from] numkit::NumError),
    #[error(transparent)]
    MeanField(#[from] meanfield::MeanFieldError),
}

pub type Result<T> = std::result::Result<T, GcnError>;
