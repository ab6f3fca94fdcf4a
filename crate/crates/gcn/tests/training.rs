use gcn::checkpoint::{checkpoint_bytes, model_from_bytes};
use gcn::{
    aggregate, adam_step, evaluate, load_checkpoint, measure_k_per_layer, save_checkpoint, train, train_seeds,
    AdamConfig, AdamState, GcnError, GraphContext, Model, ModelSpec, TrainConfig,
};
use graphstore::synthetic::{planted_partition, separable_toy, SplitSizes};
use graphstore::Graph;
use numkit::{DenseMatrix, RngStream};

fn community_graph(seed: u64) -> Graph {
    let sizes = SplitSizes { train: 30, val: 40, test: 80 };
    planted_partition(200, 3, 4.0, 0.8, 30, 0.3, 0.05, sizes, seed)
}

fn short(epochs: usize) -> TrainConfig {
    TrainConfig {
        max_epochs: epochs,
        patience: epochs,
        ..TrainConfig::default()
    }
}

#[test]
fn separable_toy_reaches_full_test_accuracy() {
    let graph = separable_toy(40, 1);
    for spec in [ModelSpec::gcn(2, 16, 2).unwrap(), ModelSpec::dr_gcn(2, 16, 2).unwrap()] {
        let out = train(&graph, &spec, &short(200), 3).unwrap();
        assert_eq!(out.report.test_acc, 1.0);
        assert!(out.report.selected_epoch <= 200);
        let ctx = GraphContext::new(&graph, &spec).unwrap();
        assert_eq!(evaluate(&out.model, &ctx, &ctx.test).unwrap(), 1.0);
    }
}

#[test]
fn gradient_vanishes_at_the_toy_optimum() {
    let graph = separable_toy(40, 2);
    let spec = ModelSpec::gcn(2, 8, 2).unwrap();
    let mut model = Model::new(spec.clone(), &mut RngStream::new(4)).unwrap();
    let ctx = GraphContext::new(&graph, &spec).unwrap();
    let cfg = AdamConfig { lr: 0.05, ..AdamConfig::default() };
    let mut state = AdamState::new(&model.params);
    let norm = |g: &gcn::Params| g.blocks().iter().flat_map(|b| b.iter()).map(|x| x * x).sum::<f64>().sqrt();
    let mut last = f64::INFINITY;
    for _ in 0..20_000 {
        let (_, g) = model.loss_and_grad(&ctx, &ctx.train, 0.0, None).unwrap();
        last = norm(&g);
        if last < 1e-8 {
            break;
        }
        adam_step(&mut model.params, &g, &mut state, &cfg);
    }
    assert!(last < 1e-8, "gradient norm {last:e}");
}

#[test]
fn same_seed_gives_identical_reports() {
    let graph = community_graph(5);
    let spec = ModelSpec::dr_gcn(30, 16, 3).unwrap();
    let a = train(&graph, &spec, &short(40), 11).unwrap();
    let b = train(&graph, &spec, &short(40), 11).unwrap();
    assert_eq!(a.report.without_timing(), b.report.without_timing());
    assert_eq!(a.model, b.model);
    let c = train(&graph, &spec, &short(40), 12).unwrap();
    assert_ne!(a.model, c.model);
}

#[test]
fn selection_keeps_first_best_validation_epoch() {
    let graph = community_graph(6);
    let spec = ModelSpec::dr_gcn(30, 16, 3).unwrap();
    let r = train(&graph, &spec, &short(80), 1).unwrap().report;
    let best = r.epochs.iter().map(|e| e.val_acc).fold(f64::NEG_INFINITY, f64::max);
    let first = r.epochs.iter().find(|e| e.val_acc == best).unwrap();
    assert_eq!(r.best_val_acc, best);
    assert_eq!(r.selected_epoch, first.epoch);
    assert_eq!(r.test_acc, first.test_acc);
    for e in &r.epochs {
        assert!((0.0..=1.0).contains(&e.train_acc) && (0.0..=1.0).contains(&e.test_acc));
    }
    assert_eq!(r.k_per_layer.len(), 2);
    assert!(r.k_per_layer.iter().all(|k| k.k.is_finite()));
    assert_eq!(r.timing.epoch_seconds.len(), r.epochs.len());
    assert!(r.curve_csv().starts_with("epoch,train_loss,val_acc,test_acc\n1,"));
}

#[test]
fn early_stopping_respects_patience() {
    let graph = separable_toy(40, 3);
    let spec = ModelSpec::gcn(2, 8, 2).unwrap();
    let cfg = TrainConfig {
        max_epochs: 500,
        patience: 10,
        ..TrainConfig::default()
    };
    let r = train(&graph, &spec, &cfg, 0).unwrap().report;
    assert!(r.stopped_early);
    assert_eq!(r.epochs.len(), r.selected_epoch + 10);
}

#[test]
fn divergence_is_reported_with_its_epoch() {
    let graph = community_graph(7);
    let spec = ModelSpec::gcn(30, 8, 3).unwrap();
    let cfg = TrainConfig { lr: 1e300, ..short(10) };
    match train(&graph, &spec, &cfg, 0) {
        Err(GcnError::Divergence { epoch, .. }) => assert!(epoch >= 1),
        other => panic!("expected divergence, got {:?}", other.map(|o| o.report.test_acc)),
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let graph = separable_toy(20, 0);
    let spec = ModelSpec::gcn(2, 4, 2).unwrap();
    for cfg in [
        TrainConfig { lr: 0.0, ..TrainConfig::default() },
        TrainConfig { patience: 900, ..TrainConfig::default() },
        TrainConfig { dropout: 1.0, ..TrainConfig::default() },
        TrainConfig { seeds: vec![], ..TrainConfig::default() },
    ] {
        assert!(matches!(train(&graph, &spec, &cfg, 0), Err(GcnError::InvalidConfig(_))));
    }
    let wrong = ModelSpec::gcn(3, 4, 2).unwrap();
    assert!(matches!(train(&graph, &wrong, &short(5), 0), Err(GcnError::Shape(_))));
}

#[test]
fn seeds_run_in_order_and_aggregate() {
    let graph = community_graph(8);
    let spec = ModelSpec::gcn(30, 8, 3).unwrap();
    let cfg = TrainConfig {
        seeds: vec![3, 1, 2],
        ..short(15)
    };
    let runs = train_seeds(&graph, &spec, &cfg, 2).unwrap();
    let seeds: Vec<u64> = runs.iter().map(|r| r.report.seed).collect();
    assert_eq!(seeds, vec![3, 1, 2]);
    let single = train(&graph, &spec, &cfg, 1).unwrap();
    assert_eq!(runs[1].model, single.model);
    let reports: Vec<_> = runs.into_iter().map(|r| r.report).collect();
    let agg = aggregate(&reports);
    let accs: Vec<f64> = reports.iter().map(|r| r.test_acc).collect();
    let mean = accs.iter().sum::<f64>() / 3.0;
    let var = accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / 2.0;
    assert_eq!(agg.runs, 3);
    assert!((agg.mean_test_acc - mean).abs() < 1e-15);
    assert!((agg.std_test_acc - var.sqrt()).abs() < 1e-15);
}

#[test]
fn checkpoint_round_trip_preserves_predictions() {
    let graph = community_graph(9);
    let spec = ModelSpec::dr_gcn(30, 8, 3).unwrap();
    let model = train(&graph, &spec, &short(10), 2).unwrap().model;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    save_checkpoint(&model, &path).unwrap();
    let loaded = load_checkpoint(&path).unwrap();
    assert_eq!(loaded, model);
    let ctx = GraphContext::new(&graph, &spec).unwrap();
    assert_eq!(loaded.logits(&ctx).unwrap(), model.logits(&ctx).unwrap());

    let mut bytes = checkpoint_bytes(&model).unwrap();
    bytes.truncate(bytes.len() - 8);
    assert!(matches!(model_from_bytes(&bytes), Err(GcnError::Checkpoint(_))));
    assert!(matches!(model_from_bytes(b"nonsense"), Err(GcnError::Checkpoint(_))));
}

#[test]
fn saturated_scales_give_unit_k() {
    let graph = community_graph(10);
    let spec = ModelSpec::dr_gcn(30, 8, 3).unwrap();
    let mut model = Model::new(spec, &mut RngStream::new(1)).unwrap();
    for layer in &mut model.params.layers {
        let dr = layer.dr.as_mut().unwrap();
        dr.w_s = DenseMatrix::zeros(dr.w_s.rows(), dr.w_s.cols());
        dr.b_s.iter_mut().for_each(|b| *b = 60.0);
    }
    let ks = measure_k_per_layer(&model, &graph).unwrap();
    assert_eq!(ks.len(), 2);
    assert!(ks.iter().all(|k| k.k == 1.0), "{ks:?}");
}

#[test]
fn isotropic_inputs_give_unit_k_for_any_scale() {
    // All sign vectors of length 3: zero mean, identity covariance.
    let features = DenseMatrix::from_fn(8, 3, |v, j| if v >> j & 1 == 1 { 1.0 } else { -1.0 });
    let edges = vec![(0, 1), (1, 2), (2, 3), (4, 5), (6, 7)];
    let labels = vec![0, 1, 0, 1, 0, 1, 0, 1];
    let graph = Graph::new(8, edges, features, labels, 2, vec![0, 1], vec![2, 3], vec![4, 5, 6, 7]).unwrap();
    let mut spec = ModelSpec::dr_gcn(3, 4, 2).unwrap();
    spec.row_normalize_features = false;
    let model = Model::new(spec, &mut RngStream::new(5)).unwrap();
    let ks = measure_k_per_layer(&model, &graph).unwrap();
    assert!((ks[0].k - 1.0).abs() < 1e-12, "{}", ks[0].k);
}

#[test]
fn plain_gcn_has_no_k() {
    let graph = community_graph(11);
    let model = Model::new(ModelSpec::gcn(30, 8, 3).unwrap(), &mut RngStream::new(0)).unwrap();
    assert!(matches!(measure_k_per_layer(&model, &graph), Err(GcnError::NoDrLayers)));
}

#[test]
fn evaluate_counts_correct_predictions() {
    let graph = separable_toy(20, 4);
    let spec = ModelSpec::gcn(2, 4, 2).unwrap();
    let model = Model::new(spec.clone(), &mut RngStream::new(0)).unwrap();
    let ctx = GraphContext::new(&graph, &spec).unwrap();
    assert!(matches!(evaluate(&model, &ctx, &[]), Err(GcnError::EmptyMask(_))));
    let acc = evaluate(&model, &ctx, &[0, 1, 2, 3]).unwrap();
    assert!([0.0, 0.25, 0.5, 0.75, 1.0].contains(&acc));
}
