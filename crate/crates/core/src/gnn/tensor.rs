//! Minimal dense-matrix reverse-mode autodiff.
//!
//! Define-by-run tape: every op computes its value eagerly and records enough
//! to propagate gradients backwards. Everything is `f64`, row-major, and
//! single-threaded for bit-for-bit determinism.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Dense row-major matrix. Vectors are n x 1 or 1 x n matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Mat {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Mat {
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            data.extend_from_slice(row);
        }
        Mat {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Mat {
        assert_eq!(data.len(), rows * cols);
        Mat { rows, cols, data }
    }

    pub fn column(data: Vec<f64>) -> Mat {
        Mat {
            rows: data.len(),
            cols: 1,
            data,
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Glorot-style uniform init in +/- sqrt(6 / (fan_in + fan_out)).
    pub fn glorot(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Mat {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        let data = (0..rows * cols)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        Mat { rows, cols, data }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(pub usize);

enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    /// matrix + row vector broadcast over rows
    AddRow(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    /// elementwise multiply by a scalar held in a 1x1 variable
    MulScalarVar(Var, Var),
    Relu(Var),
    LeakyRelu(Var, f64),
    /// n x 1 -> n x p (copy column)
    BroadcastCol(Var, usize),
    /// 1 x p -> n x p (copy row)
    BroadcastRow(Var, usize),
    Transpose(Var),
    /// row-wise softmax over `mask`-true entries; others output 0
    MaskedSoftmaxRows(Var, Vec<bool>),
    ConcatCols(Vec<Var>),
    RowMean(Var),
    /// gradient flows to the (first) row argmax
    RowMax(Var),
    /// x -> (x - min)/(max - min) + 0.5 over an n x 1 vector
    MinMaxShift(Var),
    /// columns of a constant matrix scaled by an f x 1 variable
    ScaleCols {
        x: Mat,
        w: Var,
    },
    /// mean squared error against a constant target
    MseLoss(Var, Mat),
    /// mean cross-entropy of row softmax vs integer labels over selected rows
    SoftmaxCrossEntropy {
        logits: Var,
        labels: Vec<usize>,
        rows: Vec<usize>,
    },
    /// mean binary cross-entropy of sigmoid(z_i . z_j) over node pairs
    EdgeBce {
        z: Var,
        pairs: Vec<(usize, usize)>,
        targets: Vec<f64>,
    },
}

struct Node {
    value: Mat,
    op: Op,
}

/// A single forward tape. Build ops, call [`Graph::backward`] on a scalar,
/// then read gradients with [`Graph::grad`].
pub struct Graph {
    nodes: Vec<Node>,
    grads: Vec<Option<Mat>>,
}

impl Default for Graph {
    fn default() -> Self {
        Self::new()
    }
}

impl Graph {
    pub fn new() -> Graph {
        Graph {
            nodes: Vec::new(),
            grads: Vec::new(),
        }
    }

    fn push(&mut self, value: Mat, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        self.grads.push(None);
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Mat {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        assert_eq!(self.nodes[v.0].value.data.len(), 1);
        self.nodes[v.0].value.data[0]
    }

    pub fn grad(&self, v: Var) -> Option<&Mat> {
        self.grads[v.0].as_ref()
    }

    pub fn leaf(&mut self, m: Mat) -> Var {
        self.push(m, Op::Leaf)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).matmul(self.value(b));
        self.push(value, Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let (ma, mb) = (self.value(a), self.value(b));
        assert_eq!((ma.rows, ma.cols), (mb.rows, mb.cols), "add shape mismatch");
        let data = ma.data.iter().zip(&mb.data).map(|(x, y)| x + y).collect();
        let value = Mat::from_vec(ma.rows, ma.cols, data);
        self.push(value, Op::Add(a, b))
    }

    pub fn add_row(&mut self, a: Var, bias: Var) -> Var {
        let (ma, mb) = (self.value(a), self.value(bias));
        assert_eq!(mb.rows, 1);
        assert_eq!(ma.cols, mb.cols, "add_row shape mismatch");
        let mut value = ma.clone();
        for i in 0..value.rows {
            for j in 0..value.cols {
                value.data[i * value.cols + j] += mb.data[j];
            }
        }
        self.push(value, Op::AddRow(a, bias))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let (ma, mb) = (self.value(a), self.value(b));
        assert_eq!((ma.rows, ma.cols), (mb.rows, mb.cols), "mul shape mismatch");
        let data = ma.data.iter().zip(&mb.data).map(|(x, y)| x * y).collect();
        let value = Mat::from_vec(ma.rows, ma.cols, data);
        self.push(value, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let ma = self.value(a);
        let value = Mat::from_vec(ma.rows, ma.cols, ma.data.iter().map(|x| x * c).collect());
        self.push(value, Op::Scale(a, c))
    }

    pub fn mul_scalar_var(&mut self, a: Var, s: Var) -> Var {
        let sv = self.scalar(s);
        let ma = self.value(a);
        let value = Mat::from_vec(ma.rows, ma.cols, ma.data.iter().map(|x| x * sv).collect());
        self.push(value, Op::MulScalarVar(a, s))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let ma = self.value(a);
        let value = Mat::from_vec(
            ma.rows,
            ma.cols,
            ma.data.iter().map(|x| x.max(0.0)).collect(),
        );
        self.push(value, Op::Relu(a))
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        let ma = self.value(a);
        let data = ma
            .data
            .iter()
            .map(|&x| if x > 0.0 { x } else { slope * x })
            .collect();
        let value = Mat::from_vec(ma.rows, ma.cols, data);
        self.push(value, Op::LeakyRelu(a, slope))
    }

    pub fn broadcast_col(&mut self, a: Var, cols: usize) -> Var {
        let ma = self.value(a);
        assert_eq!(ma.cols, 1);
        let mut value = Mat::zeros(ma.rows, cols);
        for i in 0..ma.rows {
            for j in 0..cols {
                value.set(i, j, ma.data[i]);
            }
        }
        self.push(value, Op::BroadcastCol(a, cols))
    }

    pub fn broadcast_row(&mut self, a: Var, rows: usize) -> Var {
        let ma = self.value(a);
        assert_eq!(ma.rows, 1);
        let mut value = Mat::zeros(rows, ma.cols);
        for i in 0..rows {
            for j in 0..ma.cols {
                value.set(i, j, ma.data[j]);
            }
        }
        self.push(value, Op::BroadcastRow(a, rows))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let value = self.value(a).transpose();
        self.push(value, Op::Transpose(a))
    }

    /// Row softmax restricted to `mask` (row-major, same shape); positions
    /// outside the mask output 0. Every row must have at least one masked-in
    /// entry or it outputs all zeros.
    pub fn masked_softmax_rows(&mut self, a: Var, mask: Vec<bool>) -> Var {
        let ma = self.value(a);
        assert_eq!(mask.len(), ma.data.len());
        let mut value = Mat::zeros(ma.rows, ma.cols);
        for i in 0..ma.rows {
            let row = i * ma.cols;
            let mut max = f64::NEG_INFINITY;
            for j in 0..ma.cols {
                if mask[row + j] {
                    max = max.max(ma.data[row + j]);
                }
            }
            if max == f64::NEG_INFINITY {
                continue;
            }
            let mut denom = 0.0;
            for j in 0..ma.cols {
                if mask[row + j] {
                    denom += (ma.data[row + j] - max).exp();
                }
            }
            for j in 0..ma.cols {
                if mask[row + j] {
                    value.data[row + j] = (ma.data[row + j] - max).exp() / denom;
                }
            }
        }
        self.push(value, Op::MaskedSoftmaxRows(a, mask))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let rows = self.value(parts[0]).rows;
        let total: usize = parts.iter().map(|&p| self.value(p).cols).sum();
        let mut value = Mat::zeros(rows, total);
        let mut offset = 0;
        for &p in parts {
            let mp = self.value(p);
            assert_eq!(mp.rows, rows);
            for i in 0..rows {
                for j in 0..mp.cols {
                    value.set(i, offset + j, mp.get(i, j));
                }
            }
            offset += mp.cols;
        }
        self.push(value, Op::ConcatCols(parts.to_vec()))
    }

    pub fn row_mean(&mut self, a: Var) -> Var {
        let ma = self.value(a);
        let data = (0..ma.rows)
            .map(|i| (0..ma.cols).map(|j| ma.get(i, j)).sum::<f64>() / ma.cols as f64)
            .collect();
        let value = Mat::column(data);
        self.push(value, Op::RowMean(a))
    }

    pub fn row_max(&mut self, a: Var) -> Var {
        let ma = self.value(a);
        let data = (0..ma.rows)
            .map(|i| {
                (0..ma.cols)
                    .map(|j| ma.get(i, j))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        let value = Mat::column(data);
        self.push(value, Op::RowMax(a))
    }

    /// Min-max normalize an n x 1 vector to [0, 1] and shift to [0.5, 1.5].
    /// A constant vector maps to all-ones with zero gradient.
    pub fn min_max_shift(&mut self, a: Var) -> Var {
        let ma = self.value(a);
        assert_eq!(ma.cols, 1);
        let min = ma.data.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = ma.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let data = if max > min {
            ma.data
                .iter()
                .map(|v| (v - min) / (max - min) + 0.5)
                .collect()
        } else {
            vec![1.0; ma.rows]
        };
        let value = Mat::column(data);
        self.push(value, Op::MinMaxShift(a))
    }

    /// out[i][j] = x[i][j] * w[j] with constant `x` and variable column `w`.
    pub fn scale_cols(&mut self, x: Mat, w: Var) -> Var {
        let mw = self.value(w);
        assert_eq!(mw.cols, 1);
        assert_eq!(x.cols, mw.rows, "scale_cols shape mismatch");
        let mut value = x.clone();
        for i in 0..x.rows {
            for j in 0..x.cols {
                value.data[i * x.cols + j] *= mw.data[j];
            }
        }
        self.push(value, Op::ScaleCols { x, w })
    }

    pub fn mse_loss(&mut self, pred: Var, target: Mat) -> Var {
        let mp = self.value(pred);
        assert_eq!((mp.rows, mp.cols), (target.rows, target.cols));
        let n = mp.data.len() as f64;
        let loss = mp
            .data
            .iter()
            .zip(&target.data)
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>()
            / n;
        self.push(Mat::from_vec(1, 1, vec![loss]), Op::MseLoss(pred, target))
    }

    /// Mean cross-entropy of row softmax against integer labels, restricted
    /// to `rows`. `labels` is indexed by absolute row.
    pub fn softmax_cross_entropy(
        &mut self,
        logits: Var,
        labels: Vec<usize>,
        rows: Vec<usize>,
    ) -> Var {
        let ml = self.value(logits);
        assert_eq!(labels.len(), ml.rows);
        assert!(!rows.is_empty());
        let mut loss = 0.0;
        for &r in &rows {
            let row = &ml.data[r * ml.cols..(r + 1) * ml.cols];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            loss += lse - row[labels[r]];
        }
        loss /= rows.len() as f64;
        self.push(
            Mat::from_vec(1, 1, vec![loss]),
            Op::SoftmaxCrossEntropy {
                logits,
                labels,
                rows,
            },
        )
    }

    /// Mean BCE of sigmoid(z_i . z_j) against targets over node pairs.
    pub fn edge_bce(&mut self, z: Var, pairs: Vec<(usize, usize)>, targets: Vec<f64>) -> Var {
        assert_eq!(pairs.len(), targets.len());
        assert!(!pairs.is_empty());
        let mz = self.value(z);
        let mut loss = 0.0;
        for (&(i, j), &t) in pairs.iter().zip(&targets) {
            let dot: f64 = (0..mz.cols).map(|c| mz.get(i, c) * mz.get(j, c)).sum();
            // numerically stable BCE with logits
            loss += dot.max(0.0) - dot * t + (-dot.abs()).exp().ln_1p();
        }
        loss /= pairs.len() as f64;
        self.push(
            Mat::from_vec(1, 1, vec![loss]),
            Op::EdgeBce { z, pairs, targets },
        )
    }

    fn accumulate(&mut self, v: Var, g: Mat) {
        match &mut self.grads[v.0] {
            Some(existing) => {
                for (a, b) in existing.data.iter_mut().zip(&g.data) {
                    *a += b;
                }
            }
            slot => *slot = Some(g),
        }
    }

    /// Reverse pass from a scalar loss. Fills gradients for every node that
    /// the loss depends on.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.value(loss).data.len() != 1 {
            return Err(Error::invalid("backward requires a scalar loss"));
        }
        if !self.value(loss).is_finite() {
            return Err(Error::numeric("non-finite loss"));
        }
        self.grads = vec![None; self.nodes.len()];
        self.grads[loss.0] = Some(Mat::from_vec(1, 1, vec![1.0]));

        for idx in (0..=loss.0).rev() {
            let Some(g) = self.grads[idx].clone() else {
                continue;
            };
            // split borrow: read op/value immutably via raw clone of needed data
            match &self.nodes[idx].op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let (a, b) = (*a, *b);
                    let ga = g.matmul(&self.nodes[b.0].value.transpose());
                    let gb = self.nodes[a.0].value.transpose().matmul(&g);
                    self.accumulate(a, ga);
                    self.accumulate(b, gb);
                }
                Op::Add(a, b) => {
                    let (a, b) = (*a, *b);
                    self.accumulate(a, g.clone());
                    self.accumulate(b, g);
                }
                Op::AddRow(a, bias) => {
                    let (a, bias) = (*a, *bias);
                    let mut gb = Mat::zeros(1, g.cols);
                    for i in 0..g.rows {
                        for j in 0..g.cols {
                            gb.data[j] += g.get(i, j);
                        }
                    }
                    self.accumulate(a, g);
                    self.accumulate(bias, gb);
                }
                Op::Mul(a, b) => {
                    let (a, b) = (*a, *b);
                    let ma = self.nodes[a.0].value.clone();
                    let mb = self.nodes[b.0].value.clone();
                    let ga = Mat::from_vec(
                        g.rows,
                        g.cols,
                        g.data.iter().zip(&mb.data).map(|(x, y)| x * y).collect(),
                    );
                    let gb = Mat::from_vec(
                        g.rows,
                        g.cols,
                        g.data.iter().zip(&ma.data).map(|(x, y)| x * y).collect(),
                    );
                    self.accumulate(a, ga);
                    self.accumulate(b, gb);
                }
                Op::Scale(a, c) => {
                    let (a, c) = (*a, *c);
                    let ga = Mat::from_vec(g.rows, g.cols, g.data.iter().map(|x| x * c).collect());
                    self.accumulate(a, ga);
                }
                Op::MulScalarVar(a, s) => {
                    let (a, s) = (*a, *s);
                    let sv = self.nodes[s.0].value.data[0];
                    let ma = self.nodes[a.0].value.clone();
                    let ga = Mat::from_vec(g.rows, g.cols, g.data.iter().map(|x| x * sv).collect());
                    let gs: f64 = g.data.iter().zip(&ma.data).map(|(x, y)| x * y).sum();
                    self.accumulate(a, ga);
                    self.accumulate(s, Mat::from_vec(1, 1, vec![gs]));
                }
                Op::Relu(a) => {
                    let a = *a;
                    let ma = self.nodes[a.0].value.clone();
                    let ga = Mat::from_vec(
                        g.rows,
                        g.cols,
                        g.data
                            .iter()
                            .zip(&ma.data)
                            .map(|(x, v)| if *v > 0.0 { *x } else { 0.0 })
                            .collect(),
                    );
                    self.accumulate(a, ga);
                }
                Op::LeakyRelu(a, slope) => {
                    let (a, slope) = (*a, *slope);
                    let ma = self.nodes[a.0].value.clone();
                    let ga = Mat::from_vec(
                        g.rows,
                        g.cols,
                        g.data
                            .iter()
                            .zip(&ma.data)
                            .map(|(x, v)| if *v > 0.0 { *x } else { slope * *x })
                            .collect(),
                    );
                    self.accumulate(a, ga);
                }
                Op::BroadcastCol(a, cols) => {
                    let (a, cols) = (*a, *cols);
                    let mut ga = Mat::zeros(g.rows, 1);
                    for i in 0..g.rows {
                        for j in 0..cols {
                            ga.data[i] += g.get(i, j);
                        }
                    }
                    self.accumulate(a, ga);
                }
                Op::BroadcastRow(a, rows) => {
                    let (a, rows) = (*a, *rows);
                    let mut ga = Mat::zeros(1, g.cols);
                    for i in 0..rows {
                        for j in 0..g.cols {
                            ga.data[j] += g.get(i, j);
                        }
                    }
                    self.accumulate(a, ga);
                }
                Op::Transpose(a) => {
                    let a = *a;
                    self.accumulate(a, g.transpose());
                }
                Op::MaskedSoftmaxRows(a, mask) => {
                    let a = *a;
                    let mask = mask.clone();
                    let out = self.nodes[idx].value.clone();
                    let mut ga = Mat::zeros(out.rows, out.cols);
                    for i in 0..out.rows {
                        let row = i * out.cols;
                        // dot = sum_k g_k * s_k over masked entries
                        let mut dot = 0.0;
                        for j in 0..out.cols {
                            if mask[row + j] {
                                dot += g.data[row + j] * out.data[row + j];
                            }
                        }
                        for j in 0..out.cols {
                            if mask[row + j] {
                                ga.data[row + j] = out.data[row + j] * (g.data[row + j] - dot);
                            }
                        }
                    }
                    self.accumulate(a, ga);
                }
                Op::ConcatCols(parts) => {
                    let parts = parts.clone();
                    let mut offset = 0;
                    for p in parts {
                        let cols = self.nodes[p.0].value.cols;
                        let mut gp = Mat::zeros(g.rows, cols);
                        for i in 0..g.rows {
                            for j in 0..cols {
                                gp.set(i, j, g.get(i, offset + j));
                            }
                        }
                        offset += cols;
                        self.accumulate(p, gp);
                    }
                }
                Op::RowMean(a) => {
                    let a = *a;
                    let cols = self.nodes[a.0].value.cols;
                    let mut ga = Mat::zeros(g.rows, cols);
                    for i in 0..g.rows {
                        for j in 0..cols {
                            ga.set(i, j, g.data[i] / cols as f64);
                        }
                    }
                    self.accumulate(a, ga);
                }
                Op::RowMax(a) => {
                    let a = *a;
                    let ma = self.nodes[a.0].value.clone();
                    let mut ga = Mat::zeros(ma.rows, ma.cols);
                    for i in 0..ma.rows {
                        let mut arg = 0;
                        for j in 1..ma.cols {
                            if ma.get(i, j) > ma.get(i, arg) {
                                arg = j;
                            }
                        }
                        ga.set(i, arg, g.data[i]);
                    }
                    self.accumulate(a, ga);
                }
                Op::MinMaxShift(a) => {
                    let a = *a;
                    let ma = self.nodes[a.0].value.clone();
                    let n = ma.rows;
                    let mut arg_min = 0;
                    let mut arg_max = 0;
                    for i in 1..n {
                        if ma.data[i] < ma.data[arg_min] {
                            arg_min = i;
                        }
                        if ma.data[i] > ma.data[arg_max] {
                            arg_max = i;
                        }
                    }
                    let range = ma.data[arg_max] - ma.data[arg_min];
                    let mut ga = Mat::zeros(n, 1);
                    if range > 0.0 {
                        for i in 0..n {
                            let gi = g.data[i];
                            ga.data[i] += gi / range;
                            ga.data[arg_min] -= gi / range;
                            let scaled = (ma.data[i] - ma.data[arg_min]) / (range * range);
                            ga.data[arg_max] -= gi * scaled;
                            ga.data[arg_min] += gi * scaled;
                        }
                    }
                    self.accumulate(a, ga);
                }
                Op::ScaleCols { x, w } => {
                    let w = *w;
                    let x = x.clone();
                    let mut gw = Mat::zeros(x.cols, 1);
                    for i in 0..x.rows {
                        for j in 0..x.cols {
                            gw.data[j] += g.get(i, j) * x.get(i, j);
                        }
                    }
                    self.accumulate(w, gw);
                }
                Op::MseLoss(pred, target) => {
                    let pred = *pred;
                    let target = target.clone();
                    let mp = self.nodes[pred.0].value.clone();
                    let n = mp.data.len() as f64;
                    let scale = 2.0 * g.data[0] / n;
                    let gp = Mat::from_vec(
                        mp.rows,
                        mp.cols,
                        mp.data
                            .iter()
                            .zip(&target.data)
                            .map(|(p, t)| scale * (p - t))
                            .collect(),
                    );
                    self.accumulate(pred, gp);
                }
                Op::SoftmaxCrossEntropy {
                    logits,
                    labels,
                    rows,
                } => {
                    let logits = *logits;
                    let labels = labels.clone();
                    let rows = rows.clone();
                    let ml = self.nodes[logits.0].value.clone();
                    let mut gl = Mat::zeros(ml.rows, ml.cols);
                    let scale = g.data[0] / rows.len() as f64;
                    for &r in &rows {
                        let row = &ml.data[r * ml.cols..(r + 1) * ml.cols];
                        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                        let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
                        let denom: f64 = exps.iter().sum();
                        for j in 0..ml.cols {
                            let p = exps[j] / denom;
                            let t = if labels[r] == j { 1.0 } else { 0.0 };
                            gl.set(r, j, scale * (p - t));
                        }
                    }
                    self.accumulate(logits, gl);
                }
                Op::EdgeBce { z, pairs, targets } => {
                    let z = *z;
                    let pairs = pairs.clone();
                    let targets = targets.clone();
                    let mz = self.nodes[z.0].value.clone();
                    let mut gz = Mat::zeros(mz.rows, mz.cols);
                    let scale = g.data[0] / pairs.len() as f64;
                    for (&(i, j), &t) in pairs.iter().zip(&targets) {
                        let dot: f64 = (0..mz.cols).map(|c| mz.get(i, c) * mz.get(j, c)).sum();
                        let sig = 1.0 / (1.0 + (-dot).exp());
                        let d = scale * (sig - t);
                        for c in 0..mz.cols {
                            gz.data[i * mz.cols + c] += d * mz.get(j, c);
                            gz.data[j * mz.cols + c] += d * mz.get(i, c);
                        }
                    }
                    self.accumulate(z, gz);
                }
            }
        }
        Ok(())
    }
}
