use numkit::DenseMatrix;

use crate::GraphError;

/// An undirected, node-featured graph with labels and a fixed train/val/test
/// split. Construct through [`Graph::new`], which enforces every invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(u32, u32)>,
    features: DenseMatrix,
    labels: Vec<u16>,
    num_classes: usize,
    train: Vec<u32>,
    val: Vec<u32>,
    test: Vec<u32>,
}

impl Graph {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: usize,
        edges: Vec<(u32, u32)>,
        features: DenseMatrix,
        labels: Vec<u16>,
        num_classes: usize,
        train: Vec<u32>,
        val: Vec<u32>,
        test: Vec<u32>,
    ) -> Result<Self, GraphError> {
        if features.rows() != n {
            return Err(GraphError::FeatureShape { n, got: features.rows() });
        }
        if let Some(pos) = features.data().iter().position(|x| !x.is_finite()) {
            return Err(GraphError::NonFiniteFeature {
                node: pos / features.cols().max(1),
            });
        }
        if labels.len() != n {
            return Err(GraphError::SizeMismatch {
                file: "labels".into(),
                expected: n as u64,
                found: labels.len() as u64,
            });
        }
        for (node, &label) in labels.iter().enumerate() {
            if label as usize >= num_classes {
                return Err(GraphError::LabelOutOfRange { node, label, classes: num_classes });
            }
        }
        validate_edges(n, &edges)?;
        for (name, idx) in [("train", &train), ("val", &val), ("test", &test)] {
            validate_index_set(name, idx, n)?;
        }
        check_disjoint("train", &train, "val", &val)?;
        check_disjoint("train", &train, "test", &test)?;
        check_disjoint("val", &val, "test", &test)?;
        Ok(Self {
            n,
            edges,
            features,
            labels,
            num_classes,
            train,
            val,
            test,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn features(&self) -> &DenseMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    pub fn train(&self) -> &[u32] {
        &self.train
    }

    pub fn val(&self) -> &[u32] {
        &self.val
    }

    pub fn test(&self) -> &[u32] {
        &self.test
    }
}

fn validate_edges(n: usize, edges: &[(u32, u32)]) -> Result<(), GraphError> {
    let mut prev: Option<(u32, u32)> = None;
    for &(i, j) in edges {
        for x in [i, j] {
            if x as usize >= n {
                return Err(GraphError::IndexOutOfRange {
                    what: "edges".into(),
                    index: x as u64,
                    n,
                });
            }
        }
        if i == j {
            return Err(GraphError::SelfLoop(i));
        }
        if i > j {
            return Err(GraphError::EdgeOrientation(i, j));
        }
        if let Some(p) = prev {
            if p == (i, j) {
                return Err(GraphError::DuplicateEdge(i, j));
            }
            if p > (i, j) {
                return Err(GraphError::Unsorted("edges".into()));
            }
        }
        prev = Some((i, j));
    }
    Ok(())
}

fn validate_index_set(name: &str, idx: &[u32], n: usize) -> Result<(), GraphError> {
    for w in idx.windows(2) {
        if w[0] >= w[1] {
            return Err(GraphError::Unsorted(format!("{name} split")));
        }
    }
    if let Some(&bad) = idx.iter().find(|&&v| v as usize >= n) {
        return Err(GraphError::IndexOutOfRange {
            what: format!("{name} split"),
            index: bad as u64,
            n,
        });
    }
    Ok(())
}

fn check_disjoint(a_name: &str, a: &[u32], b_name: &str, b: &[u32]) -> Result<(), GraphError> {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                return Err(GraphError::OverlappingSplits {
                    a: a_name.into(),
                    b: b_name.into(),
                    node: a[i],
                })
            }
        }
    }
    Ok(())
}
