//! On-disk bundle format, little-endian throughout:
//!
//! | file          | contents                                             |
//! |---------------|------------------------------------------------------|
//! | `meta.json`   | `{"n","d","classes","edges","format_version":1}`     |
//! | `features.f32`| `n·d` f32, row-major                                 |
//! | `labels.u16`  | `n` u16                                              |
//! | `edges.u32`   | `2·edges` u32, pairs `(i, j)`, `i < j`, sorted       |
//! | `*.idx`       | u32 node indices, ascending (train / val / test)     |

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use numkit::DenseMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Graph, GraphError};

pub const FORMAT_VERSION: u32 = 1;

pub const BUNDLE_FILES: [&str; 7] = [
    "meta.json",
    "features.f32",
    "labels.u16",
    "edges.u32",
    "train.idx",
    "val.idx",
    "test.idx",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleMeta {
    pub n: usize,
    pub d: usize,
    pub classes: usize,
    pub edges: usize,
    pub format_version: u32,
}

fn read_file(dir: &Path, name: &str) -> Result<Vec<u8>, GraphError> {
    let path = dir.join(name);
    if !path.is_file() {
        return Err(GraphError::MissingFile(path));
    }
    fs::read(&path).map_err(|source| GraphError::Io { path, source })
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), GraphError> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|source| GraphError::Io { path, source })
}

fn expect_len(file: &str, bytes: &[u8], expected: usize) -> Result<(), GraphError> {
    if bytes.len() != expected {
        return Err(GraphError::SizeMismatch {
            file: file.into(),
            expected: expected as u64,
            found: bytes.len() as u64,
        });
    }
    Ok(())
}

fn u32s(bytes: &[u8]) -> Vec<u32> {
    bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect()
}

fn read_index(dir: &Path, name: &str, n: usize) -> Result<Vec<u32>, GraphError> {
    let bytes = read_file(dir, name)?;
    if bytes.len() % 4 != 0 {
        return Err(GraphError::SizeMismatch {
            file: name.into(),
            expected: (bytes.len() / 4 * 4) as u64,
            found: bytes.len() as u64,
        });
    }
    let idx = u32s(&bytes);
    if let Some(&bad) = idx.iter().find(|&&v| v as usize >= n) {
        return Err(GraphError::IndexOutOfRange {
            what: name.into(),
            index: bad as u64,
            n,
        });
    }
    Ok(idx)
}

pub fn read_meta(dir: &Path) -> Result<BundleMeta, GraphError> {
    let bytes = read_file(dir, "meta.json")?;
    let meta: BundleMeta =
        serde_json::from_slice(&bytes).map_err(|e| GraphError::BadMeta(e.to_string()))?;
    if meta.format_version != FORMAT_VERSION {
        return Err(GraphError::BadMeta(format!(
            "unsupported format_version {}",
            meta.format_version
        )));
    }
    Ok(meta)
}

/// Loads and validates a bundle directory.
pub fn load_bundle(dir: impl AsRef<Path>) -> Result<Graph, GraphError> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(GraphError::MissingFile(dir.to_path_buf()));
    }
    let meta = read_meta(dir)?;
    let (n, d) = (meta.n, meta.d);

    let fbytes = read_file(dir, "features.f32")?;
    expect_len("features.f32", &fbytes, n * d * 4)?;
    let feats: Vec<f64> = fbytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    if let Some(pos) = feats.iter().position(|x| !x.is_finite()) {
        return Err(GraphError::NonFiniteFeature { node: pos / d.max(1) });
    }
    let features = DenseMatrix::new(n, d, feats).expect("length checked above");

    let lbytes = read_file(dir, "labels.u16")?;
    expect_len("labels.u16", &lbytes, n * 2)?;
    let labels: Vec<u16> = lbytes
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]))
        .collect();

    let ebytes = read_file(dir, "edges.u32")?;
    expect_len("edges.u32", &ebytes, meta.edges * 8)?;
    let flat = u32s(&ebytes);
    let edges: Vec<(u32, u32)> = flat.chunks_exact(2).map(|p| (p[0], p[1])).collect();

    let train = read_index(dir, "train.idx", n)?;
    let val = read_index(dir, "val.idx", n)?;
    let test = read_index(dir, "test.idx", n)?;

    Graph::new(n, edges, features, labels, meta.classes, train, val, test)
}

/// Writes `g` as a bundle. Features are narrowed to f32, so a graph loaded
/// from a bundle round-trips byte-identically.
pub fn save_bundle(g: &Graph, dir: impl AsRef<Path>) -> Result<(), GraphError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| GraphError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let meta = BundleMeta {
        n: g.num_nodes(),
        d: g.num_features(),
        classes: g.num_classes(),
        edges: g.edges().len(),
        format_version: FORMAT_VERSION,
    };
    let meta_json = serde_json::to_vec(&meta).map_err(|e| GraphError::BadMeta(e.to_string()))?;
    write_file(dir, "meta.json", &meta_json)?;

    let feats: Vec<u8> = g
        .features()
        .data()
        .iter()
        .flat_map(|&x| (x as f32).to_le_bytes())
        .collect();
    write_file(dir, "features.f32", &feats)?;
    let labels: Vec<u8> = g.labels().iter().flat_map(|l| l.to_le_bytes()).collect();
    write_file(dir, "labels.u16", &labels)?;
    let edges: Vec<u8> = g
        .edges()
        .iter()
        .flat_map(|&(i, j)| [i.to_le_bytes(), j.to_le_bytes()])
        .flatten()
        .collect();
    write_file(dir, "edges.u32", &edges)?;
    for (name, idx) in [("train.idx", g.train()), ("val.idx", g.val()), ("test.idx", g.test())] {
        let bytes: Vec<u8> = idx.iter().flat_map(|v| v.to_le_bytes()).collect();
        write_file(dir, name, &bytes)?;
    }
    Ok(())
}

/// SHA-256 hex digest of every bundle file that exists in `dir`.
pub fn bundle_checksums(dir: impl AsRef<Path>) -> Result<BTreeMap<String, String>, GraphError> {
    let dir = dir.as_ref();
    let mut out = BTreeMap::new();
    for name in BUNDLE_FILES {
        let path: PathBuf = dir.join(name);
        if !path.is_file() {
            continue;
        }
        let bytes = fs::read(&path).map_err(|source| GraphError::Io { path, source })?;
        let digest = Sha256::digest(&bytes);
        out.insert(
            name.to_string(),
            digest.iter().map(|b| format!("{b:02x}")).collect(),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Graph {
        let features = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.5, 0.25], vec![0.0, 3.0]]).unwrap();
        Graph::new(3, vec![(0, 1), (1, 2)], features, vec![0, 1, 1], 2, vec![0], vec![1], vec![2]).unwrap()
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let g = tiny();
        save_bundle(&g, a.path()).unwrap();
        let loaded = load_bundle(a.path()).unwrap();
        assert_eq!(loaded, g);
        save_bundle(&loaded, b.path()).unwrap();
        for f in BUNDLE_FILES {
            assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
        }
        assert_eq!(
            fs::read_to_string(a.path().join("meta.json")).unwrap(),
            r#"{"n":3,"d":2,"classes":2,"edges":2,"format_version":1}"#
        );
    }

    #[test]
    fn distinct_errors() {
        let dir = tempfile::tempdir().unwrap();
        save_bundle(&tiny(), dir.path()).unwrap();

        fs::write(dir.path().join("labels.u16"), [0u8; 4]).unwrap();
        assert!(matches!(load_bundle(dir.path()), Err(GraphError::SizeMismatch { .. })));
        save_bundle(&tiny(), dir.path()).unwrap();

        fs::write(dir.path().join("test.idx"), 9u32.to_le_bytes()).unwrap();
        assert!(matches!(load_bundle(dir.path()), Err(GraphError::IndexOutOfRange { .. })));

        fs::write(dir.path().join("test.idx"), 0u32.to_le_bytes()).unwrap();
        assert!(matches!(load_bundle(dir.path()), Err(GraphError::OverlappingSplits { .. })));

        fs::remove_file(dir.path().join("edges.u32")).unwrap();
        assert!(matches!(load_bundle(dir.path()), Err(GraphError::MissingFile(_))));

        assert!(matches!(load_bundle(dir.path().join("nope")), Err(GraphError::MissingFile(_))));
    }

    #[test]
    fn checksums_cover_all_files() {
        let dir = tempfile::tempdir().unwrap();
        save_bundle(&tiny(), dir.path()).unwrap();
        let sums = bundle_checksums(dir.path()).unwrap();
        assert_eq!(sums.len(), BUNDLE_FILES.len());
        assert!(sums.values().all(|h| h.len() == 64));
    }
}
