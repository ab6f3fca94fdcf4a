use std::borrow::Cow;

use graphstore::{normalize_adjacency, Graph, SparseAdjacency};
use numkit::{DenseMatrix, RngStream};
use serde::{Deserialize, Serialize};

use crate::layers::{
    add_bias, batch_norm_backward, batch_norm_cached, dr_backward, dr_from_pooled, layer_norm_backward,
    layer_norm_cached, pool, scale_columns, uniform_pool_weights, DrForward, NormCache,
};
use crate::loss::{accuracy, cross_entropy_grad, softmax_cross_entropy, LossParts};
use crate::params::{NormParams, Params};
use crate::spec::{ActivationOrder, ModelSpec, NormMode, PoolScope};
use crate::{GcnError, Result};

/// Everything derived from the graph that stays fixed during training.
#[derive(Debug, Clone)]
pub struct GraphContext {
    pub adj: SparseAdjacency,
    pub adj_t: SparseAdjacency,
    pub features: DenseMatrix,
    pub pool_weights: Vec<f64>,
    /// Pooled input features; the first Dr block sees the same value every epoch.
    pub pooled_features: Vec<f64>,
    pub labels: Vec<usize>,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn row_normalize(x: &DenseMatrix) -> DenseMatrix {
    let mut out = x.clone();
    let d = out.cols();
    for row in out.data_mut().chunks_mut(d.max(1)) {
        let s: f64 = row.iter().sum();
        if s != 0.0 {
            row.iter_mut().for_each(|v| *v /= s);
        }
    }
    out
}

impl GraphContext {
    pub fn new(graph: &Graph, spec: &ModelSpec) -> Result<Self> {
        if graph.num_features() != spec.input_dim() || graph.num_classes() != spec.num_classes() {
            return Err(GcnError::Shape(format!(
                "graph has {} features / {} classes, model expects {} / {}",
                graph.num_features(),
                graph.num_classes(),
                spec.input_dim(),
                spec.num_classes()
            )));
        }
        let adj = normalize_adjacency(graph, spec.adjacency);
        let adj_t = adj.transpose();
        let features = if spec.row_normalize_features {
            row_normalize(graph.features())
        } else {
            graph.features().clone()
        };
        let excluded: &[u32] = match spec.pool_scope {
            PoolScope::All => &[],
            PoolScope::ExcludeTest => graph.test(),
        };
        let pool_weights = uniform_pool_weights(graph.num_nodes(), excluded);
        let pooled_features = pool(&features, &pool_weights);
        let idx = |s: &[u32]| s.iter().map(|&v| v as usize).collect::<Vec<_>>();
        Ok(Self {
            adj,
            adj_t,
            pooled_features,
            features,
            pool_weights,
            labels: graph.labels().iter().map(|&l| l as usize).collect(),
            train: idx(graph.train()),
            val: idx(graph.val()),
            test: idx(graph.test()),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.adj.n()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub spec: ModelSpec,
    pub params: Params,
}

/// Per-layer values kept for the backward pass.
pub struct LayerCache<'a> {
    norm: Option<NormCache>,
    pub dr: Option<DrForward>,
    /// Input entries kept by dropout; `None` when no dropout was applied or
    /// the mask is not needed.
    keep: Option<Vec<bool>>,
    keep_scale: f64,
    /// Dropped input fed to the linear map (after norm).
    zd: Cow<'a, DenseMatrix>,
    /// Post order: pre-activation output. Pre order: scaled input `S∘zd`.
    pre: Option<DenseMatrix>,
    /// Pre order: activated input `σ(S∘zd)`.
    act_in: Option<DenseMatrix>,
}

impl LayerCache<'_> {
    /// Input of the linear map after normalization and dropout.
    pub fn linear_input(&self) -> &DenseMatrix {
        &self.zd
    }
}

pub struct ForwardPass<'a> {
    pub layers: Vec<LayerCache<'a>>,
    pub logits: DenseMatrix,
}

fn dropout<'a>(z: Cow<'a, DenseMatrix>, rate: f64, rng: &mut RngStream, want_mask: bool) -> (Cow<'a, DenseMatrix>, Option<Vec<bool>>, f64) {
    let scale = 1.0 / (1.0 - rate);
    let mut out = z.into_owned();
    let mut mask = want_mask.then(|| vec![true; out.data().len()]);
    // Zero entries stay zero whatever the mask, so only nonzeros draw.
    for (k, x) in out.data_mut().iter_mut().enumerate() {
        if *x != 0.0 {
            if rng.uniform() < rate {
                *x = 0.0;
                if let Some(m) = &mut mask {
                    m[k] = false;
                }
            } else {
                *x *= scale;
            }
        }
    }
    (Cow::Owned(out), mask, scale)
}

impl Model {
    pub fn new(spec: ModelSpec, rng: &mut RngStream) -> Result<Self> {
        spec.validate()?;
        let params = Params::init(&spec, rng);
        Ok(Self { spec, params })
    }

    fn needs_input_grad(&self, l: usize) -> bool {
        l > 0 || self.spec.layers[l].norm.has_affine()
    }

    /// Forward pass. With `dropout = Some((rate, rng))` inputs of every layer
    /// are dropped; the Dr block always sees the undropped input.
    pub fn forward<'a>(&self, ctx: &'a GraphContext, mut dropout_rng: Option<(f64, &mut RngStream)>) -> Result<ForwardPass<'a>> {
        if ctx.features.cols() != self.spec.input_dim() {
            return Err(GcnError::Shape("context does not match model input".into()));
        }
        let mut caches = Vec::with_capacity(self.spec.layers.len());
        let mut input: Cow<'a, DenseMatrix> = Cow::Borrowed(&ctx.features);
        for (l, (ls, lp)) in self.spec.layers.iter().zip(&self.params.layers).enumerate() {
            let (z, norm) = match (ls.norm, &lp.norm) {
                (NormMode::Batch, Some(np)) => {
                    let (y, c) = batch_norm_cached(&input, &np.gamma, &np.beta, self.spec.norm_eps);
                    (Cow::Owned(y), Some(c))
                }
                (NormMode::Layer | NormMode::DrLayer, Some(np)) => {
                    let (y, c) = layer_norm_cached(&input, &np.gamma, &np.beta, self.spec.norm_eps);
                    (Cow::Owned(y), Some(c))
                }
                _ => (input, None),
            };
            let dr = match &lp.dr {
                Some(dp) => {
                    let pooled = if l == 0 && norm.is_none() {
                        ctx.pooled_features.clone()
                    } else {
                        pool(&z, &ctx.pool_weights)
                    };
                    Some(dr_from_pooled(pooled, dp))
                }
                None => None,
            };
            let (zd, keep, keep_scale) = match dropout_rng.as_mut() {
                Some((rate, rng)) if *rate > 0.0 => dropout(z, *rate, rng, self.needs_input_grad(l)),
                _ => (z, None, 1.0),
            };
            let s = dr.as_ref().map(|d| d.s.as_slice());
            let (out, pre, act_in) = match self.spec.order {
                ActivationOrder::Post => {
                    let w = match s {
                        Some(s) => scale_columns(&lp.w, s),
                        None => lp.w.clone(),
                    };
                    let y = zd.matmul(&w.transpose())?;
                    let mut p = ctx.adj_t.matmul(&y);
                    add_bias(&mut p, &lp.b);
                    let out = p.map(|x| ls.activation.apply(x));
                    (out, Some(p), None)
                }
                ActivationOrder::Pre => {
                    let x = match s {
                        Some(s) => DenseMatrix::from_fn(zd.rows(), zd.cols(), |v, j| zd.get(v, j) * s[j]),
                        None => zd.clone().into_owned(),
                    };
                    let u = x.map(|v| ls.activation.apply(v));
                    let y = u.matmul(&lp.w.transpose())?;
                    let mut p = ctx.adj_t.matmul(&y);
                    add_bias(&mut p, &lp.b);
                    (p, Some(x), Some(u))
                }
            };
            if !out.is_finite() {
                return Err(GcnError::Divergence { epoch: 0, loss: f64::NAN });
            }
            caches.push(LayerCache {
                norm,
                dr,
                keep,
                keep_scale,
                zd,
                pre,
                act_in,
            });
            input = Cow::Owned(out);
        }
        Ok(ForwardPass {
            layers: caches,
            logits: input.into_owned(),
        })
    }

    /// Reverse-mode gradients of the data loss given `∂L/∂logits`.
    pub fn backward(&self, ctx: &GraphContext, fwd: &ForwardPass, dlogits: DenseMatrix) -> Result<Params> {
        let mut grads = Params::zeros(&self.spec);
        let mut dout = dlogits;
        for l in (0..self.spec.layers.len()).rev() {
            let ls = &self.spec.layers[l];
            let lp = &self.params.layers[l];
            let cache = &fwd.layers[l];
            let need_dz = self.needs_input_grad(l);
            let dp = match self.spec.order {
                ActivationOrder::Post => {
                    let p = cache.pre.as_ref().expect("post cache");
                    DenseMatrix::from_fn(dout.rows(), dout.cols(), |v, a| dout.get(v, a) * ls.activation.derivative(p.get(v, a)))
                }
                ActivationOrder::Pre => dout,
            };
            grads.layers[l].b = dp.col_sums();
            let dy = ctx.adj.matmul(&dp);
            let s = cache.dr.as_ref().map(|d| d.s.as_slice());
            let mut ds = s.map(|s| vec![0.0; s.len()]);
            let dzd = match self.spec.order {
                ActivationOrder::Post => {
                    let mt = cache.zd.t_matmul(&dy)?;
                    let gw = &mut grads.layers[l].w;
                    for a in 0..lp.w.rows() {
                        for j in 0..lp.w.cols() {
                            let m = mt.get(j, a);
                            gw.set(a, j, m * s.map_or(1.0, |s| s[j]));
                            if let Some(ds) = &mut ds {
                                ds[j] += lp.w.get(a, j) * m;
                            }
                        }
                    }
                    if need_dz {
                        let w = match s {
                            Some(s) => scale_columns(&lp.w, s),
                            None => lp.w.clone(),
                        };
                        Some(dy.matmul(&w)?)
                    } else {
                        None
                    }
                }
                ActivationOrder::Pre => {
                    let u = cache.act_in.as_ref().expect("pre cache");
                    let x = cache.pre.as_ref().expect("pre cache");
                    grads.layers[l].w = u.t_matmul(&dy)?.transpose();
                    if need_dz || s.is_some() {
                        let du = dy.matmul(&lp.w)?;
                        let dx = DenseMatrix::from_fn(du.rows(), du.cols(), |v, j| {
                            du.get(v, j) * ls.activation.derivative(x.get(v, j))
                        });
                        if let Some(ds) = &mut ds {
                            for v in 0..dx.rows() {
                                for (j, acc) in ds.iter_mut().enumerate() {
                                    *acc += dx.get(v, j) * cache.zd.get(v, j);
                                }
                            }
                        }
                        need_dz.then(|| match s {
                            Some(s) => DenseMatrix::from_fn(dx.rows(), dx.cols(), |v, j| dx.get(v, j) * s[j]),
                            None => dx,
                        })
                    } else {
                        None
                    }
                }
            };
            let mut dz = dzd.map(|mut m| {
                if let Some(keep) = &cache.keep {
                    for (x, &k) in m.data_mut().iter_mut().zip(keep) {
                        *x = if k { *x * cache.keep_scale } else { 0.0 };
                    }
                }
                m
            });
            if let (Some(dp_), Some(fw), Some(ds)) = (&lp.dr, &cache.dr, &ds) {
                let (g, dpool) = dr_backward(dp_, fw, ds);
                grads.layers[l].dr = Some(g);
                if let Some(dz) = &mut dz {
                    let q = dz.cols();
                    for (row, &w) in dz.data_mut().chunks_mut(q).zip(&ctx.pool_weights) {
                        if w != 0.0 {
                            row.iter_mut().zip(&dpool).for_each(|(x, d)| *x += w * d);
                        }
                    }
                }
            }
            let dinput = match (&cache.norm, &lp.norm, dz) {
                (Some(nc), Some(np), Some(dz)) => {
                    let (dx, dgamma, dbeta) = match ls.norm {
                        NormMode::Batch => batch_norm_backward(&dz, nc, &np.gamma),
                        _ => layer_norm_backward(&dz, nc, &np.gamma),
                    };
                    grads.layers[l].norm = Some(NormParams { gamma: dgamma, beta: dbeta });
                    dx
                }
                (_, _, Some(dz)) => dz,
                (_, _, None) => break,
            };
            dout = dinput;
        }
        Ok(grads)
    }

    /// Data loss plus `λ·Σ‖W‖²` on `mask`, with the matching gradients.
    pub fn loss_and_grad(
        &self,
        ctx: &GraphContext,
        mask: &[usize],
        weight_decay: f64,
        dropout_rng: Option<(f64, &mut RngStream)>,
    ) -> Result<(LossParts, Params)> {
        let fwd = self.forward(ctx, dropout_rng)?;
        let (data, probs) = softmax_cross_entropy(&fwd.logits, &ctx.labels, mask)?;
        let mut grads = self.backward(ctx, &fwd, cross_entropy_grad(&probs, &ctx.labels, mask))?;
        let decay = weight_decay * self.params.decay_norm_sq();
        let info = self.params.block_info();
        for ((g, p), i) in grads.blocks_mut().into_iter().zip(self.params.blocks()).zip(&info) {
            if i.decay {
                g.iter_mut().zip(p).for_each(|(g, p)| *g += 2.0 * weight_decay * p);
            }
        }
        Ok((
            LossParts {
                data,
                decay,
                total: data + decay,
            },
            grads,
        ))
    }

    /// Data loss and decay term without gradients, dropout off.
    pub fn loss(&self, ctx: &GraphContext, mask: &[usize], weight_decay: f64) -> Result<LossParts> {
        let fwd = self.forward(ctx, None)?;
        let (data, _) = softmax_cross_entropy(&fwd.logits, &ctx.labels, mask)?;
        let decay = weight_decay * self.params.decay_norm_sq();
        Ok(LossParts {
            data,
            decay,
            total: data + decay,
        })
    }

    pub fn logits(&self, ctx: &GraphContext) -> Result<DenseMatrix> {
        Ok(self.forward(ctx, None)?.logits)
    }
}

/// Fraction of nodes in `idx` whose argmax prediction is correct.
pub fn evaluate(model: &Model, ctx: &GraphContext, idx: &[usize]) -> Result<f64> {
    if idx.is_empty() {
        return Err(GcnError::EmptyMask("evaluation"));
    }
    accuracy(&model.logits(ctx)?, &ctx.labels, idx)
}
