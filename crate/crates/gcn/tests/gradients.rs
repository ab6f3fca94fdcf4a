use gcn::{ActivationOrder, GraphContext, Model, ModelSpec, NormMode};
use graphstore::synthetic::{random_graph, SplitSizes};
use graphstore::Graph;
use numkit::RngStream;

const H: f64 = 1e-5;

fn small_graph(seed: u64) -> Graph {
    let sizes = SplitSizes { train: 10, val: 5, test: 5 };
    random_graph(20, 40, 6, 3, 0.5, sizes, seed)
}

/// Generic parameters: every block nudged away from its initial value so
/// zero biases and unit gains do not hide mistakes.
fn generic_model(spec: ModelSpec, seed: u64) -> Model {
    let mut rng = RngStream::new(seed);
    let mut model = Model::new(spec, &mut rng).unwrap();
    for block in model.params.blocks_mut() {
        for x in block.iter_mut() {
            *x += 0.3 * rng.normal();
        }
    }
    model
}

/// Largest relative error between analytic and central-difference gradients
/// over every scalar parameter, with a floor of 1e-6 on the denominator.
fn max_relative_error(model: &Model, graph: &Graph, weight_decay: f64) -> (f64, String) {
    let ctx = GraphContext::new(graph, &model.spec).unwrap();
    let (_, grads) = model.loss_and_grad(&ctx, &ctx.train, weight_decay, None).unwrap();
    let info = model.params.block_info();
    let analytic = grads.blocks();
    let mut worst = (0.0, String::new());
    for (b, block) in info.iter().enumerate() {
        for k in 0..analytic[b].len() {
            let eval = |delta: f64| {
                let mut m = model.clone();
                m.params.blocks_mut()[b][k] += delta;
                m.loss(&ctx, &ctx.train, weight_decay).unwrap().total
            };
            let fd = (eval(H) - eval(-H)) / (2.0 * H);
            let a = analytic[b][k];
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6);
            if rel > worst.0 {
                worst = (rel, format!("{}[{k}]: analytic {a:e}, fd {fd:e}", block.name));
            }
        }
    }
    worst
}

fn check(norm: NormMode, order: ActivationOrder, seed: u64) {
    let spec = ModelSpec::new(&[6, 5, 3], norm, order).unwrap();
    let model = generic_model(spec, seed);
    let (err, at) = max_relative_error(&model, &small_graph(seed), 5e-4);
    assert!(err < 1e-4, "{norm:?}/{order:?}: relative error {err:e} at {at}");
}

#[test]
fn dr_gcn_every_parameter_matches_finite_differences() {
    for seed in [1, 2, 3] {
        check(NormMode::Dr, ActivationOrder::Post, seed);
    }
}

#[test]
fn plain_gcn_matches_finite_differences() {
    check(NormMode::None, ActivationOrder::Post, 4);
}

#[test]
fn batch_norm_matches_finite_differences() {
    check(NormMode::Batch, ActivationOrder::Post, 5);
}

#[test]
fn layer_norm_matches_finite_differences() {
    check(NormMode::Layer, ActivationOrder::Post, 6);
}

#[test]
fn dr_after_layer_norm_matches_finite_differences() {
    check(NormMode::DrLayer, ActivationOrder::Post, 7);
}

#[test]
fn pre_activation_matches_finite_differences() {
    check(NormMode::Dr, ActivationOrder::Pre, 8);
    check(NormMode::None, ActivationOrder::Pre, 9);
}

#[test]
fn three_layer_dr_gcn_matches_finite_differences() {
    let spec = ModelSpec::new(&[6, 5, 4, 3], NormMode::Dr, ActivationOrder::Post).unwrap();
    let model = generic_model(spec, 10);
    let (err, at) = max_relative_error(&model, &small_graph(10), 5e-4);
    assert!(err < 1e-4, "relative error {err:e} at {at}");
}

#[test]
fn without_dr_there_are_no_dr_gradients() {
    let graph = small_graph(11);
    let spec = ModelSpec::gcn(6, 5, 3).unwrap();
    let model = generic_model(spec, 11);
    let ctx = GraphContext::new(&graph, &model.spec).unwrap();
    let (_, grads) = model.loss_and_grad(&ctx, &ctx.train, 5e-4, None).unwrap();
    assert!(grads.layers.iter().all(|l| l.dr.is_none() && l.norm.is_none()));
}

#[test]
fn loss_decomposes_into_data_and_decay() {
    let graph = small_graph(12);
    let model = generic_model(ModelSpec::dr_gcn(6, 5, 3).unwrap(), 12);
    let ctx = GraphContext::new(&graph, &model.spec).unwrap();
    let lambda = 0.01;
    let parts = model.loss(&ctx, &ctx.train, lambda).unwrap();
    let mut sq = 0.0;
    for l in &model.params.layers {
        sq += l.w.data().iter().map(|x| x * x).sum::<f64>();
        let dr = l.dr.as_ref().unwrap();
        sq += dr.w_g.data().iter().map(|x| x * x).sum::<f64>();
        sq += dr.w_s.data().iter().map(|x| x * x).sum::<f64>();
    }
    assert!((parts.decay - lambda * sq).abs() < 1e-12 * parts.decay);
    assert_eq!(parts.total, parts.data + parts.decay);
    let no_decay = model.loss(&ctx, &ctx.train, 0.0).unwrap();
    assert_eq!(no_decay.data, parts.data);
}
