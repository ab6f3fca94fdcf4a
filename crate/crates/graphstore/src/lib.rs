//! Graph storage for transductive node classification.
//!
//! Graphs are stored node-major: row `v` of the feature matrix is node `v`.
//! Undirected edges are kept once as `(i, j)` with `i < j`; the sparse
//! adjacency materializes both directions.

mod adjacency;
mod bundle;
mod error;
mod graph;
pub mod synthetic;

pub use adjacency::{degrees, normalize_adjacency, AdjacencyVariant, SparseAdjacency};
pub use bundle::{bundle_checksums, load_bundle, read_meta, save_bundle, BundleMeta, BUNDLE_FILES, FORMAT_VERSION};
pub use error::GraphError;
pub use graph::Graph;
