//! Checkpoint layout: an 8-byte little-endian header length, a JSON header
//! `{"format","version","spec","blocks":[{"name","rows","cols","decay"}]}`,
//! then every parameter block as little-endian f64 in declaration order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::Model;
use crate::params::{BlockInfo, Params};
use crate::spec::ModelSpec;
use crate::{GcnError, Result};

const FORMAT: &str = "drgcn-checkpoint";
const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    spec: ModelSpec,
    blocks: Vec<BlockInfo>,
}

pub fn checkpoint_bytes(model: &Model) -> Result<Vec<u8>> {
    let header = Header {
        format: FORMAT.into(),
        version: VERSION,
        spec: model.spec.clone(),
        blocks: model.params.block_info(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| GcnError::Checkpoint(e.to_string()))?;
    let mut out = Vec::with_capacity(8 + json.len() + 8 * model.params.num_params());
    out.extend((json.len() as u64).to_le_bytes());
    out.extend(json);
    for block in model.params.blocks() {
        for x in block {
            out.extend(x.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<Model> {
    let bad = |m: &str| GcnError::Checkpoint(m.to_string());
    if bytes.len() < 8 {
        return Err(bad("truncated header length"));
    }
    let hlen = u64::from_le_bytes(bytes[..8].try_into().expect("8 bytes")) as usize;
    let body = bytes.get(8..8 + hlen).ok_or_else(|| bad("truncated header"))?;
    let header: Header = serde_json::from_slice(body).map_err(|e| GcnError::Checkpoint(e.to_string()))?;
    if header.format != FORMAT || header.version != VERSION {
        return Err(bad("unknown checkpoint format"));
    }
    header.spec.validate()?;
    let mut params = Params::zeros(&header.spec);
    if params.block_info() != header.blocks {
        return Err(bad("parameter blocks do not match the model spec"));
    }
    let mut data = &bytes[8 + hlen..];
    if data.len() != 8 * params.num_params() {
        return Err(GcnError::Checkpoint(format!(
            "expected {} parameter bytes, found {}",
            8 * params.num_params(),
            data.len()
        )));
    }
    for block in params.blocks_mut() {
        for x in block.iter_mut() {
            *x = f64::from_le_bytes(data[..8].try_into().expect("8 bytes"));
            data = &data[8..];
        }
    }
    if !params.is_finite() {
        return Err(bad("non-finite parameter"));
    }
    Ok(Model {
        spec: header.spec,
        params,
    })
}

pub fn save_checkpoint(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, checkpoint_bytes(model)?).map_err(|source| GcnError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| GcnError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    model_from_bytes(&bytes)
}
