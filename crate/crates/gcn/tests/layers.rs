use gcn::layers::{dr_vector, drgcn_forward, gcn_forward, gcn_forward_scaled, uniform_pool_weights};
use gcn::spec::{elu, sigmoid};
use gcn::{batch_norm_forward, layer_norm_forward, Activation, DrParams, LayerParams};
use graphstore::SparseAdjacency;
use numkit::{DenseMatrix, RngStream};
use proptest::prelude::*;

fn random_matrix(rows: usize, cols: usize, rng: &mut RngStream) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.normal())
}

fn random_adjacency(n: usize, rng: &mut RngStream) -> SparseAdjacency {
    let mut t = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if rng.uniform() < 0.4 {
                t.push((i, j, rng.uniform()));
            }
        }
    }
    SparseAdjacency::from_triplets(n, t)
}

fn random_layer(inp: usize, out: usize, rng: &mut RngStream) -> LayerParams {
    let g = ((inp as f64).sqrt().round() as usize).max(1);
    LayerParams {
        w: random_matrix(out, inp, rng),
        b: (0..out).map(|_| rng.normal()).collect(),
        dr: Some(DrParams {
            w_g: random_matrix(g, inp, rng),
            b_g: (0..g).map(|_| rng.normal()).collect(),
            w_s: random_matrix(inp, g, rng),
            b_s: (0..inp).map(|_| rng.normal()).collect(),
        }),
        norm: None,
    }
}

/// σ(W·R·Ã + b) written feature-major with explicit sums over every index.
fn dense_oracle(r: &DenseMatrix, a: &DenseMatrix, p: &LayerParams, act: Activation, s: Option<&[f64]>) -> DenseMatrix {
    let n = r.rows();
    DenseMatrix::from_fn(n, p.w.rows(), |v, o| {
        let mut acc = 0.0;
        for u in 0..n {
            let mut wr = 0.0;
            for j in 0..r.cols() {
                wr += p.w.get(o, j) * s.map_or(1.0, |s| s[j]) * r.get(u, j);
            }
            acc += wr * a.get(u, v);
        }
        act.apply(acc + p.b[o])
    })
}

fn dense_s(r: &DenseMatrix, dr: &DrParams, w: &[f64]) -> Vec<f64> {
    let pooled: Vec<f64> = (0..r.cols()).map(|j| (0..r.rows()).map(|v| w[v] * r.get(v, j)).sum()).collect();
    let g: Vec<f64> = (0..dr.w_g.rows())
        .map(|k| elu((0..r.cols()).map(|j| dr.w_g.get(k, j) * pooled[j]).sum::<f64>() + dr.b_g[k]))
        .collect();
    (0..r.cols())
        .map(|j| sigmoid((0..g.len()).map(|k| dr.w_s.get(j, k) * g[k]).sum::<f64>() + dr.b_s[j]))
        .collect()
}

#[test]
fn identity_adjacency_and_weight_return_input() {
    let mut rng = RngStream::new(1);
    let r = random_matrix(4, 3, &mut rng);
    let adj = SparseAdjacency::from_triplets(4, (0..4).map(|i| (i, i, 1.0)).collect());
    let p = LayerParams {
        w: DenseMatrix::identity(3),
        b: vec![0.0; 3],
        dr: None,
        norm: None,
    };
    assert_eq!(gcn_forward(&r, &adj, &p, Activation::Identity).unwrap(), r);
}

#[test]
fn two_node_path_swaps_representations() {
    let r = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
    let adj = SparseAdjacency::from_triplets(2, vec![(0, 1, 1.0), (1, 0, 1.0)]);
    let p = LayerParams {
        w: DenseMatrix::identity(2),
        b: vec![0.0; 2],
        dr: None,
        norm: None,
    };
    let out = gcn_forward(&r, &adj, &p, Activation::Identity).unwrap();
    assert_eq!(out, DenseMatrix::from_rows(&[vec![3.0, 4.0], vec![1.0, 2.0]]).unwrap());
}

#[test]
fn gcn_forward_matches_dense_oracle() {
    let mut rng = RngStream::new(2);
    for act in [Activation::Relu, Activation::Elu, Activation::Identity] {
        let r = random_matrix(7, 5, &mut rng);
        let adj = random_adjacency(7, &mut rng);
        let p = random_layer(5, 4, &mut rng);
        let got = gcn_forward(&r, &adj, &p, act).unwrap();
        let want = dense_oracle(&r, &adj.to_dense(), &p, act, None);
        assert!(got.max_abs_diff(&want) < 1e-12, "{act:?}");
    }
}

#[test]
fn drgcn_forward_matches_dense_oracle() {
    let mut rng = RngStream::new(3);
    for n in [3, 6, 9] {
        let r = random_matrix(n, 6, &mut rng);
        let adj = random_adjacency(n, &mut rng);
        let p = random_layer(6, 3, &mut rng);
        let w = uniform_pool_weights(n, &[]);
        let s = dense_s(&r, p.dr.as_ref().unwrap(), &w);
        let got_s = dr_vector(&r, p.dr.as_ref().unwrap(), &w).unwrap();
        for (a, b) in got_s.iter().zip(&s) {
            assert!((a - b).abs() < 1e-14);
            assert!(*a > 0.0 && *a < 1.0);
        }
        let got = drgcn_forward(&r, &adj, &p, Activation::Relu, &w).unwrap();
        let want = dense_oracle(&r, &adj.to_dense(), &p, Activation::Relu, Some(&s));
        assert!(got.max_abs_diff(&want) < 1e-12);
    }
}

#[test]
fn zero_dr_parameters_halve_the_input() {
    let mut rng = RngStream::new(4);
    let r = random_matrix(5, 4, &mut rng);
    let adj = random_adjacency(5, &mut rng);
    let mut p = random_layer(4, 3, &mut rng);
    p.dr = Some(DrParams::zeros(4, 2));
    let w = uniform_pool_weights(5, &[]);
    assert_eq!(dr_vector(&r, p.dr.as_ref().unwrap(), &w).unwrap(), vec![0.5; 4]);
    let plain = LayerParams { dr: None, ..p.clone() };
    let got = drgcn_forward(&r, &adj, &p, Activation::Relu, &w).unwrap();
    let want = gcn_forward(&r.scale(0.5), &adj, &plain, Activation::Relu).unwrap();
    assert!(got.max_abs_diff(&want) < 1e-15);
}

#[test]
fn single_dimension_zero_pool_gives_half() {
    let dr = DrParams {
        w_g: DenseMatrix::from_rows(&[vec![1.0]]).unwrap(),
        b_g: vec![0.0],
        w_s: DenseMatrix::from_rows(&[vec![1.0]]).unwrap(),
        b_s: vec![0.0],
    };
    let r = DenseMatrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap();
    assert_eq!(dr_vector(&r, &dr, &[0.5, 0.5]).unwrap(), vec![0.5]);
}

#[test]
fn saturated_scale_reproduces_plain_gcn_exactly() {
    let mut rng = RngStream::new(5);
    let r = random_matrix(6, 4, &mut rng);
    let adj = random_adjacency(6, &mut rng);
    let mut p = random_layer(4, 3, &mut rng);
    let dr = p.dr.as_mut().unwrap();
    dr.w_s = DenseMatrix::zeros(4, 2);
    dr.b_s = vec![60.0; 4];
    let w = uniform_pool_weights(6, &[]);
    assert_eq!(dr_vector(&r, p.dr.as_ref().unwrap(), &w).unwrap(), vec![1.0; 4]);
    let plain = LayerParams { dr: None, ..p.clone() };
    assert_eq!(
        drgcn_forward(&r, &adj, &p, Activation::Relu, &w).unwrap(),
        gcn_forward(&r, &adj, &plain, Activation::Relu).unwrap()
    );
    assert_eq!(
        gcn_forward_scaled(&r, &adj, &plain, Activation::Relu, &[1.0; 4]).unwrap(),
        gcn_forward(&r, &adj, &plain, Activation::Relu).unwrap()
    );
}

#[test]
fn dr_vector_ignores_node_order() {
    let mut rng = RngStream::new(6);
    let r = random_matrix(11, 5, &mut rng);
    let p = random_layer(5, 2, &mut rng);
    let mut perm: Vec<usize> = (0..11).collect();
    rng.shuffle(&mut perm);
    let shuffled = DenseMatrix::from_fn(11, 5, |v, j| r.get(perm[v], j));
    let w = uniform_pool_weights(11, &[]);
    let a = dr_vector(&r, p.dr.as_ref().unwrap(), &w).unwrap();
    let b = dr_vector(&shuffled, p.dr.as_ref().unwrap(), &w).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-14);
    }
}

#[test]
fn batch_and_layer_norm_standardize() {
    let mut rng = RngStream::new(7);
    let x = DenseMatrix::from_fn(30, 7, |_, j| 3.0 * rng.normal() + j as f64);
    let ones = vec![1.0; 7];
    let zeros = vec![0.0; 7];
    let bn = batch_norm_forward(&x, &ones, &zeros, 1e-12);
    for j in 0..7 {
        let col: Vec<f64> = (0..30).map(|v| bn.get(v, j)).collect();
        let mean = col.iter().sum::<f64>() / 30.0;
        let var = col.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / 30.0;
        assert!(mean.abs() < 1e-10 && (var - 1.0).abs() < 1e-10, "column {j}: {mean} {var}");
    }
    let ln = layer_norm_forward(&x, &ones, &zeros, 1e-12);
    for v in 0..30 {
        let row = ln.row(v);
        let mean = row.iter().sum::<f64>() / 7.0;
        let var = row.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / 7.0;
        assert!(mean.abs() < 1e-10 && (var - 1.0).abs() < 1e-10, "row {v}: {mean} {var}");
    }
}

#[test]
fn norms_zero_out_constant_input() {
    let x = DenseMatrix::from_fn(4, 3, |_, _| 2.5);
    let ones = vec![1.0; 3];
    let zeros = vec![0.0; 3];
    assert!(batch_norm_forward(&x, &ones, &zeros, 1e-5).data().iter().all(|&v| v == 0.0));
    assert!(layer_norm_forward(&x, &ones, &zeros, 1e-5).data().iter().all(|&v| v == 0.0));
}

proptest! {
    #[test]
    fn relu_commutes_with_positive_scaling(
        h in prop::collection::vec(-10.0f64..10.0, 12),
        s in prop::collection::vec(0.01f64..10.0, 4),
    ) {
        for (k, &x) in h.iter().enumerate() {
            let si = s[k % 4];
            prop_assert_eq!(Activation::Relu.apply(si * x), si * Activation::Relu.apply(x));
        }
    }
}
