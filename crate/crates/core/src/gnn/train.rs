//! Seeded training loop for node embedders: stack of message-passing layers
//! with ReLU between (none after the last), plain SGD with optional momentum,
//! and two self-supervised objectives that do not need held-out labels.

use std::collections::HashSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ingest::{OmicsMatrix, PhenotypeVector};
use crate::netbuild::FeatureGraph;
use crate::stats;

use super::layers::{GnnLayerConfig, GraphTensors, Layer, LayerKind};
use super::tensor::{Graph, Mat, Var};
use super::{node_feature_matrix, EmbeddingMatrix};

#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    /// Regress a scalar head on each node toward |corr(feature, phenotype)|.
    PhenotypeRegression,
    /// Reconstruct edges: sigmoid(z_i . z_j) vs observed adjacency, with
    /// seeded per-epoch negative sampling.
    AdjacencyReconstruction { negatives_per_edge: usize },
}

impl Objective {
    fn tag(&self) -> &'static str {
        match self {
            Objective::PhenotypeRegression => "phenotype_regression",
            Objective::AdjacencyReconstruction { .. } => "adjacency_reconstruction",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub kind: LayerKind,
    pub n_layers: usize,
    pub hidden_dim: usize,
    pub embedding_dim: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub objective: Objective,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            kind: LayerKind::Gcn,
            n_layers: 2,
            hidden_dim: 64,
            embedding_dim: 32,
            learning_rate: 0.01,
            momentum: 0.0,
            epochs: 200,
            objective: Objective::PhenotypeRegression,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainMeta {
    pub kind: String,
    pub objective: String,
    pub epochs: usize,
    pub seed: u64,
    pub loss_curve: Vec<f64>,
}

/// All trainable matrices: the layer stack plus an optional linear head.
struct Model {
    layers: Vec<Layer>,
    head: Vec<Mat>,
}

impl Model {
    fn init(cfg: &TrainConfig, in_dim: usize, rng: &mut ChaCha8Rng) -> Result<Model> {
        if cfg.n_layers == 0 {
            return Err(Error::invalid("need at least one layer"));
        }
        let mut layers = Vec::with_capacity(cfg.n_layers);
        for l in 0..cfg.n_layers {
            let li = if l == 0 { in_dim } else { cfg.hidden_dim };
            let lo = if l + 1 == cfg.n_layers {
                cfg.embedding_dim
            } else {
                cfg.hidden_dim
            };
            layers.push(Layer::init(
                GnnLayerConfig {
                    kind: cfg.kind.clone(),
                    in_dim: li,
                    out_dim: lo,
                },
                rng,
            )?);
        }
        let head = match cfg.objective {
            Objective::PhenotypeRegression => {
                vec![Mat::glorot(cfg.embedding_dim, 1, rng), Mat::zeros(1, 1)]
            }
            Objective::AdjacencyReconstruction { .. } => Vec::new(),
        };
        Ok(Model { layers, head })
    }

    fn params(&self) -> Vec<&Mat> {
        let mut out: Vec<&Mat> = Vec::new();
        for l in &self.layers {
            out.extend(l.params.iter());
        }
        out.extend(self.head.iter());
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Mat> {
        let mut out: Vec<&mut Mat> = Vec::new();
        for l in &mut self.layers {
            out.extend(l.params.iter_mut());
        }
        out.extend(self.head.iter_mut());
        out
    }

    /// Forward pass on a fresh tape. Returns the tape, the embedding var,
    /// the loss var, and one leaf var per parameter (in `params()` order).
    fn forward_loss(
        &self,
        gt: &GraphTensors,
        features: &Mat,
        batch: &LossBatch,
    ) -> Result<(Graph, Var, Var, Vec<Var>)> {
        let mut g = Graph::new();
        let mut param_vars = Vec::new();
        for p in self.params() {
            param_vars.push(g.leaf(p.clone()));
        }
        let mut h = g.leaf(features.clone());
        let mut cursor = 0;
        let n_layers = self.layers.len();
        for (l, layer) in self.layers.iter().enumerate() {
            let np = layer.params.len();
            h = layer.forward(&mut g, gt, h, &param_vars[cursor..cursor + np]);
            cursor += np;
            if l + 1 < n_layers {
                h = g.relu(h);
            }
        }
        let loss = match batch {
            LossBatch::Regression { targets } => {
                let w = param_vars[cursor];
                let b = param_vars[cursor + 1];
                let pred = g.matmul(h, w);
                let pred = g.add_row(pred, b);
                g.mse_loss(pred, targets.clone())
            }
            LossBatch::Reconstruction { pairs, targets } => {
                g.edge_bce(h, pairs.clone(), targets.clone())
            }
        };
        Ok((g, h, loss, param_vars))
    }
}

enum LossBatch {
    Regression {
        targets: Mat,
    },
    Reconstruction {
        pairs: Vec<(usize, usize)>,
        targets: Vec<f64>,
    },
}

fn regression_targets(g: &FeatureGraph, x: &OmicsMatrix, y: &PhenotypeVector) -> Result<Mat> {
    let target = y.numeric();
    let mut vals = Vec::with_capacity(g.n_nodes());
    for name in &g.node_names {
        let f = x
            .feature_index(name)
            .ok_or_else(|| Error::invalid(format!("graph node {name:?} missing from matrix")))?;
        vals.push(stats::pearson(&x.column(f), &target).abs());
    }
    Ok(Mat::column(vals))
}

fn sample_reconstruction_batch(
    g: &FeatureGraph,
    negatives_per_edge: usize,
    rng: &mut ChaCha8Rng,
) -> Result<LossBatch> {
    if g.edges.is_empty() {
        return Err(Error::invalid(
            "adjacency reconstruction needs at least one edge",
        ));
    }
    let n = g.n_nodes();
    let edge_set: HashSet<(usize, usize)> = g.edges.iter().map(|e| (e.i, e.j)).collect();
    let mut pairs: Vec<(usize, usize)> = edge_set.iter().copied().collect();
    pairs.sort_unstable();
    let mut targets = vec![1.0; pairs.len()];
    let n_non_edges = n * (n - 1) / 2 - edge_set.len();
    let want = (pairs.len() * negatives_per_edge).min(n_non_edges);
    let mut drawn: HashSet<(usize, usize)> = HashSet::new();
    while drawn.len() < want {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i == j {
            continue;
        }
        let key = (i.min(j), i.max(j));
        if !edge_set.contains(&key) {
            drawn.insert(key);
        }
    }
    let mut negs: Vec<(usize, usize)> = drawn.into_iter().collect();
    negs.sort_unstable();
    targets.extend(std::iter::repeat_n(0.0, negs.len()));
    pairs.extend(negs);
    Ok(LossBatch::Reconstruction { pairs, targets })
}

/// Train a node embedder on one feature graph. Fully deterministic for a
/// fixed config: weight init, visit order, and negative sampling all derive
/// from `cfg.seed`.
pub fn train_embedder(
    g: &FeatureGraph,
    x: &OmicsMatrix,
    y: &PhenotypeVector,
    cfg: &TrainConfig,
) -> Result<EmbeddingMatrix> {
    if cfg.learning_rate <= 0.0 {
        return Err(Error::invalid("learning rate must be positive"));
    }
    let features = node_feature_matrix(g, x, y)?;
    let gt = GraphTensors::build(g);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = Model::init(cfg, features.cols, &mut rng)?;
    let fixed_batch = match cfg.objective {
        Objective::PhenotypeRegression => Some(LossBatch::Regression {
            targets: regression_targets(g, x, y)?,
        }),
        Objective::AdjacencyReconstruction { .. } => None,
    };

    let mut velocity: Vec<Mat> = model
        .params()
        .iter()
        .map(|p| Mat::zeros(p.rows, p.cols))
        .collect();
    let mut loss_curve = Vec::with_capacity(cfg.epochs);
    for _epoch in 0..cfg.epochs {
        let batch = match (&cfg.objective, &fixed_batch) {
            (_, Some(b)) => match b {
                LossBatch::Regression { targets } => LossBatch::Regression {
                    targets: targets.clone(),
                },
                LossBatch::Reconstruction { pairs, targets } => LossBatch::Reconstruction {
                    pairs: pairs.clone(),
                    targets: targets.clone(),
                },
            },
            (Objective::AdjacencyReconstruction { negatives_per_edge }, None) => {
                sample_reconstruction_batch(g, *negatives_per_edge, &mut rng)?
            }
            _ => unreachable!(),
        };
        let (mut tape, _, loss, param_vars) = model.forward_loss(&gt, &features, &batch)?;
        let loss_val = tape.scalar(loss);
        if !loss_val.is_finite() {
            return Err(Error::numeric("non-finite training loss"));
        }
        loss_curve.push(loss_val);
        tape.backward(loss)?;
        let grads: Vec<Mat> = param_vars
            .iter()
            .map(|&v| {
                tape.grad(v).cloned().unwrap_or_else(|| {
                    let m = tape.value(v);
                    Mat::zeros(m.rows, m.cols)
                })
            })
            .collect();
        for ((p, vbuf), grad) in model
            .params_mut()
            .into_iter()
            .zip(&mut velocity)
            .zip(&grads)
        {
            for k in 0..p.data.len() {
                vbuf.data[k] = cfg.momentum * vbuf.data[k] + grad.data[k];
                p.data[k] -= cfg.learning_rate * vbuf.data[k];
            }
        }
    }

    // final embedding from the trained weights; the batch only affects the
    // loss head, not the embedding itself
    let batch = match &fixed_batch {
        Some(LossBatch::Regression { targets }) => LossBatch::Regression {
            targets: targets.clone(),
        },
        _ => sample_reconstruction_batch(
            g,
            match cfg.objective {
                Objective::AdjacencyReconstruction { negatives_per_edge } => negatives_per_edge,
                _ => 1,
            },
            &mut rng,
        )?,
    };
    let (tape, emb, _, _) = model.forward_loss(&gt, &features, &batch)?;
    let values = tape.value(emb).data.clone();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("non-finite embedding values"));
    }
    Ok(EmbeddingMatrix {
        node_names: g.node_names.clone(),
        dim: cfg.embedding_dim,
        values,
        meta: Some(TrainMeta {
            kind: format!("{:?}", cfg.kind),
            objective: cfg.objective.tag().to_string(),
            epochs: cfg.epochs,
            seed: cfg.seed,
            loss_curve,
        }),
    })
}

/// Compare analytic parameter gradients against central finite differences
/// for a freshly initialized model on `g`. Returns the maximum normalized
/// error `|analytic - numeric| / max(|analytic|, |numeric|, 1)` over every
/// parameter entry.
pub fn gradient_check(
    g: &FeatureGraph,
    features: &Mat,
    cfg: &TrainConfig,
    epsilon: f64,
) -> Result<f64> {
    let gt = GraphTensors::build(g);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = Model::init(cfg, features.cols, &mut rng)?;
    // jitter every parameter so no ReLU pre-activation sits exactly on the
    // kink (zero biases make that alignment common and finite differences
    // disagree with the subgradient there)
    for p in model.params_mut() {
        for v in p.data.iter_mut() {
            *v += rng.gen_range(0.02..0.1) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        }
    }
    let batch = match cfg.objective {
        Objective::PhenotypeRegression => LossBatch::Regression {
            // synthetic targets keep the check self-contained
            targets: Mat::column((0..g.n_nodes()).map(|i| (i as f64 * 0.37).sin()).collect()),
        },
        Objective::AdjacencyReconstruction { negatives_per_edge } => {
            sample_reconstruction_batch(g, negatives_per_edge, &mut rng)?
        }
    };
    let clone_batch = |b: &LossBatch| match b {
        LossBatch::Regression { targets } => LossBatch::Regression {
            targets: targets.clone(),
        },
        LossBatch::Reconstruction { pairs, targets } => LossBatch::Reconstruction {
            pairs: pairs.clone(),
            targets: targets.clone(),
        },
    };

    let (mut tape, _, loss, param_vars) = model.forward_loss(&gt, features, &batch)?;
    tape.backward(loss)?;
    let analytic: Vec<Mat> = param_vars
        .iter()
        .map(|&v| {
            tape.grad(v).cloned().unwrap_or_else(|| {
                let m = tape.value(v);
                Mat::zeros(m.rows, m.cols)
            })
        })
        .collect();

    let n_params = analytic.len();
    let mut max_err = 0.0f64;
    for pi in 0..n_params {
        for k in 0..analytic[pi].data.len() {
            let orig = model.params()[pi].data[k];
            model.params_mut()[pi].data[k] = orig + epsilon;
            let (plus_tape, _, plus_loss, _) =
                model.forward_loss(&gt, features, &clone_batch(&batch))?;
            let plus = plus_tape.scalar(plus_loss);
            model.params_mut()[pi].data[k] = orig - epsilon;
            let (minus_tape, _, minus_loss, _) =
                model.forward_loss(&gt, features, &clone_batch(&batch))?;
            let minus = minus_tape.scalar(minus_loss);
            model.params_mut()[pi].data[k] = orig;
            let numeric = (plus - minus) / (2.0 * epsilon);
            let a = analytic[pi].data[k];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1.0);
            if err > max_err {
                max_err = err;
            }
        }
    }
    Ok(max_err)
}
