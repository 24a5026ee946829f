//! The four message-passing layer families: GCN, GAT, GraphSAGE, GIN.
//!
//! Edge-weight handling: GCN uses weights in the normalized adjacency, GAT
//! adds log(w) to the attention logits, SAGE and GIN aggregate over the
//! unweighted neighbor set.

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::netbuild::FeatureGraph;

use super::tensor::{Graph, Mat, Var};

#[derive(Debug, Clone, PartialEq)]
pub enum LayerKind {
    Gcn,
    Gat { num_heads: usize, leaky_slope: f64 },
    Sage,
    Gin { epsilon: f64, learnable: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnLayerConfig {
    pub kind: LayerKind,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl GnnLayerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.in_dim == 0 || self.out_dim == 0 {
            return Err(Error::invalid("layer dims must be positive"));
        }
        if let LayerKind::Gat { num_heads, .. } = &self.kind {
            if *num_heads == 0 {
                return Err(Error::invalid("gat needs at least one head"));
            }
            if !self.out_dim.is_multiple_of(*num_heads) {
                return Err(Error::invalid(format!(
                    "gat out_dim {} not divisible by {} heads",
                    self.out_dim, num_heads
                )));
            }
        }
        Ok(())
    }
}

/// Constant graph operators shared by all layers of one model.
pub struct GraphTensors {
    pub n: usize,
    /// D^{-1/2} (A + I) D^{-1/2}, weighted
    pub ahat: Mat,
    /// unweighted mean over distinct neighbors (zero row for isolated nodes)
    pub mean_agg: Mat,
    /// unweighted 0/1 adjacency (no self-loops)
    pub sum_agg: Mat,
    /// neighbors plus self, row-major n*n
    pub gat_mask: Vec<bool>,
    /// log(edge weight) additive attention bias; 0 on the diagonal
    pub gat_bias: Mat,
}

impl GraphTensors {
    pub fn build(g: &FeatureGraph) -> GraphTensors {
        let n = g.n_nodes();
        let mut a = Mat::zeros(n, n);
        for e in &g.edges {
            a.set(e.i, e.j, e.weight);
            a.set(e.j, e.i, e.weight);
        }
        let mut ahat = Mat::zeros(n, n);
        {
            let mut deg = vec![0.0; n];
            for i in 0..n {
                deg[i] = 1.0 + (0..n).map(|j| a.get(i, j)).sum::<f64>();
            }
            for i in 0..n {
                for j in 0..n {
                    let w = if i == j {
                        1.0 + a.get(i, j)
                    } else {
                        a.get(i, j)
                    };
                    if w != 0.0 {
                        ahat.set(i, j, w / (deg[i] * deg[j]).sqrt());
                    }
                }
            }
        }
        let mut mean_agg = Mat::zeros(n, n);
        let mut sum_agg = Mat::zeros(n, n);
        let mut gat_mask = vec![false; n * n];
        let mut gat_bias = Mat::zeros(n, n);
        for i in 0..n {
            gat_mask[i * n + i] = true;
            let neighbors: Vec<usize> = (0..n).filter(|&j| a.get(i, j) != 0.0).collect();
            for &j in &neighbors {
                sum_agg.set(i, j, 1.0);
                mean_agg.set(i, j, 1.0 / neighbors.len() as f64);
                gat_mask[i * n + j] = true;
                gat_bias.set(i, j, a.get(i, j).ln());
            }
        }
        GraphTensors {
            n,
            ahat,
            mean_agg,
            sum_agg,
            gat_mask,
            gat_bias,
        }
    }
}

/// One layer: configuration plus its parameter matrices (owned outside any
/// tape so they survive across epochs).
#[derive(Debug, Clone)]
pub struct Layer {
    pub config: GnnLayerConfig,
    pub params: Vec<Mat>,
}

impl Layer {
    /// Seeded Glorot initialization. Parameter order is fixed per kind.
    pub fn init(config: GnnLayerConfig, rng: &mut ChaCha8Rng) -> Result<Layer> {
        config.validate()?;
        let (fi, fo) = (config.in_dim, config.out_dim);
        let params = match &config.kind {
            LayerKind::Gcn => vec![Mat::glorot(fi, fo, rng), Mat::zeros(1, fo)],
            LayerKind::Sage => vec![
                Mat::glorot(fi, fo, rng),
                Mat::glorot(fi, fo, rng),
                Mat::zeros(1, fo),
            ],
            LayerKind::Gin { epsilon, learnable } => {
                let mut p = vec![
                    Mat::glorot(fi, fo, rng),
                    Mat::zeros(1, fo),
                    Mat::glorot(fo, fo, rng),
                    Mat::zeros(1, fo),
                ];
                if *learnable {
                    p.push(Mat::from_vec(1, 1, vec![*epsilon]));
                }
                p
            }
            LayerKind::Gat { num_heads, .. } => {
                let dh = fo / num_heads;
                let mut p = Vec::new();
                for _ in 0..*num_heads {
                    p.push(Mat::glorot(fi, dh, rng));
                    p.push(Mat::glorot(dh, 1, rng));
                    p.push(Mat::glorot(dh, 1, rng));
                }
                p
            }
        };
        Ok(Layer { config, params })
    }

    /// Forward pass on the tape. `param_vars` must be this layer's params
    /// registered as leaves in the same order as `self.params`.
    pub fn forward(&self, g: &mut Graph, gt: &GraphTensors, h: Var, param_vars: &[Var]) -> Var {
        match &self.config.kind {
            LayerKind::Gcn => {
                let ahat = g.leaf(gt.ahat.clone());
                let agg = g.matmul(ahat, h);
                let hw = g.matmul(agg, param_vars[0]);
                g.add_row(hw, param_vars[1])
            }
            LayerKind::Sage => {
                let self_part = g.matmul(h, param_vars[0]);
                let mean = g.leaf(gt.mean_agg.clone());
                let neigh = g.matmul(mean, h);
                let neigh_part = g.matmul(neigh, param_vars[1]);
                let s = g.add(self_part, neigh_part);
                g.add_row(s, param_vars[2])
            }
            LayerKind::Gin { epsilon, learnable } => {
                let sum = g.leaf(gt.sum_agg.clone());
                let neigh = g.matmul(sum, h);
                let scaled_self = if *learnable {
                    let eps = param_vars[4];
                    let he = g.mul_scalar_var(h, eps);
                    g.add(h, he)
                } else {
                    g.scale(h, 1.0 + epsilon)
                };
                let pre = g.add(scaled_self, neigh);
                let h1 = g.matmul(pre, param_vars[0]);
                let h1 = g.add_row(h1, param_vars[1]);
                let h1 = g.relu(h1);
                let h2 = g.matmul(h1, param_vars[2]);
                g.add_row(h2, param_vars[3])
            }
            LayerKind::Gat {
                num_heads,
                leaky_slope,
            } => {
                let mut heads = Vec::with_capacity(*num_heads);
                for k in 0..*num_heads {
                    let w = param_vars[3 * k];
                    let a_src = param_vars[3 * k + 1];
                    let a_dst = param_vars[3 * k + 2];
                    let wh = g.matmul(h, w);
                    let src = g.matmul(wh, a_src);
                    let dst = g.matmul(wh, a_dst);
                    let dst_t = g.transpose(dst);
                    let src_b = g.broadcast_col(src, gt.n);
                    let dst_b = g.broadcast_row(dst_t, gt.n);
                    let e = g.add(src_b, dst_b);
                    let e = g.leaky_relu(e, *leaky_slope);
                    let bias = g.leaf(gt.gat_bias.clone());
                    let logits = g.add(e, bias);
                    let alpha = g.masked_softmax_rows(logits, gt.gat_mask.clone());
                    heads.push(g.matmul(alpha, wh));
                }
                if heads.len() == 1 {
                    heads[0]
                } else {
                    g.concat_cols(&heads)
                }
            }
        }
    }
}
