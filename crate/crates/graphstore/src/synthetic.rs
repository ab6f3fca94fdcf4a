//! Seeded synthetic graphs used by tests, benchmarks and smoke runs.

use numkit::{DenseMatrix, RngStream};

use crate::Graph;

#[derive(Debug, Clone, Copy)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

fn split(n: usize, sizes: SplitSizes, rng: &mut RngStream) -> (Vec<u32>, Vec<u32>, Vec<u32>) {
    assert!(sizes.train + sizes.val + sizes.test <= n, "splits exceed node count");
    let mut perm: Vec<u32> = (0..n as u32).collect();
    rng.shuffle(&mut perm);
    let take = |k: usize, from: usize| {
        let mut v = perm[from..from + k].to_vec();
        v.sort_unstable();
        v
    };
    let train = take(sizes.train, 0);
    let val = take(sizes.val, sizes.train);
    let test = take(sizes.test, sizes.train + sizes.val);
    (train, val, test)
}

fn finish_edges(mut edges: Vec<(u32, u32)>) -> Vec<(u32, u32)> {
    edges.sort_unstable();
    edges.dedup();
    edges
}

/// Uniformly random edges, Bernoulli(`density`) binary features and uniform
/// labels. Edge count is exact.
pub fn random_graph(
    n: usize,
    num_edges: usize,
    d: usize,
    classes: usize,
    density: f64,
    sizes: SplitSizes,
    seed: u64,
) -> Graph {
    let mut rng = RngStream::new(seed);
    let max_edges = n * (n - 1) / 2;
    assert!(num_edges <= max_edges, "too many edges requested");
    let mut set = std::collections::BTreeSet::new();
    while set.len() < num_edges {
        let a = rng.below(n) as u32;
        let b = rng.below(n) as u32;
        if a != b {
            set.insert((a.min(b), a.max(b)));
        }
    }
    let edges: Vec<(u32, u32)> = set.into_iter().collect();
    let features = DenseMatrix::from_fn(n, d, |_, _| if rng.uniform() < density { 1.0 } else { 0.0 });
    let labels = (0..n).map(|_| rng.below(classes) as u16).collect();
    let (train, val, test) = split(n, sizes, &mut rng);
    Graph::new(n, edges, features, labels, classes, train, val, test).expect("synthetic graph is valid")
}

/// Stochastic block model with class-dependent sparse features: each class
/// owns a block of `d / classes` feature columns that fire with probability
/// `signal`, and every column fires with probability `noise`.
#[allow(clippy::too_many_arguments)]
pub fn planted_partition(
    n: usize,
    classes: usize,
    avg_degree: f64,
    homophily: f64,
    d: usize,
    signal: f64,
    noise: f64,
    sizes: SplitSizes,
    seed: u64,
) -> Graph {
    let mut rng = RngStream::new(seed);
    let labels: Vec<u16> = (0..n).map(|v| (v % classes) as u16).collect();
    let mut by_class: Vec<Vec<u32>> = vec![Vec::new(); classes];
    for (v, &l) in labels.iter().enumerate() {
        by_class[l as usize].push(v as u32);
    }
    let target = (avg_degree * n as f64 / 2.0).round() as usize;
    let mut edges = Vec::with_capacity(target);
    while edges.len() < target {
        let a = rng.below(n);
        let b = if rng.uniform() < homophily {
            let pool = &by_class[labels[a] as usize];
            pool[rng.below(pool.len())] as usize
        } else {
            rng.below(n)
        };
        if a != b {
            edges.push((a.min(b) as u32, a.max(b) as u32));
        }
    }
    let block = (d / classes).max(1);
    let features = DenseMatrix::from_fn(n, d, |v, j| {
        let own = j / block == labels[v] as usize;
        let p = if own { signal } else { noise };
        if rng.uniform() < p {
            1.0
        } else {
            0.0
        }
    });
    let (train, val, test) = split(n, sizes, &mut rng);
    Graph::new(n, finish_edges(edges), features, labels, classes, train, val, test)
        .expect("synthetic graph is valid")
}

/// Two-class graph whose features are the one-hot labels and whose edges
/// never cross classes: trivially separable.
pub fn separable_toy(n: usize, seed: u64) -> Graph {
    let mut rng = RngStream::new(seed);
    let labels: Vec<u16> = (0..n).map(|v| (v % 2) as u16).collect();
    let mut edges = Vec::new();
    for v in 0..n {
        let w = (v + 2) % n;
        if w % 2 == v % 2 && w != v {
            edges.push((v.min(w) as u32, v.max(w) as u32));
        }
    }
    let features = DenseMatrix::from_fn(n, 2, |v, j| if j == labels[v] as usize { 1.0 } else { 0.0 });
    let sizes = SplitSizes {
        train: n / 5,
        val: n / 5,
        test: n / 2,
    };
    let (train, val, test) = split(n, sizes, &mut rng);
    Graph::new(n, finish_edges(edges), features, labels, 2, train, val, test).expect("toy graph is valid")
}
