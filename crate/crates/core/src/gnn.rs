//! GNN node embedding: a minimal dense autodiff core ([`tensor`]), the four
//! message-passing layer families ([`layers`]), and a seeded trainer
//! ([`train`]).

use std::path::Path;

use crate::error::{Error, Result};
use crate::ingest::{format_value, OmicsMatrix, PhenotypeVector};
use crate::netbuild::FeatureGraph;
use crate::stats;

pub mod layers;
pub mod tensor;
pub mod train;

pub use layers::{GnnLayerConfig, LayerKind};
pub use tensor::{Graph, Mat, Var};
pub use train::{train_embedder, Objective, TrainConfig, TrainMeta};

/// Nodes x d embedding with provenance of the training run.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub node_names: Vec<String>,
    pub dim: usize,
    /// row-major nodes x dim
    pub values: Vec<f64>,
    pub meta: Option<TrainMeta>,
}

impl EmbeddingMatrix {
    pub fn n_nodes(&self) -> usize {
        self.node_names.len()
    }

    pub fn row(&self, node: usize) -> &[f64] {
        &self.values[node * self.dim..(node + 1) * self.dim]
    }

    pub fn to_mat(&self) -> Mat {
        Mat::from_vec(self.n_nodes(), self.dim, self.values.clone())
    }
}

pub fn write_embedding_csv(e: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    let mut header = vec!["node".to_string()];
    header.extend((1..=e.dim).map(|i| format!("e{i}")));
    w.write_record(&header)?;
    for (i, name) in e.node_names.iter().enumerate() {
        let mut rec = vec![name.clone()];
        rec.extend(e.row(i).iter().map(|&v| format_value(v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_embedding_csv(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let dim = reader.headers()?.len().saturating_sub(1);
    let mut node_names = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        node_names.push(rec[0].to_string());
        for j in 1..rec.len() {
            values.push(rec[j].parse::<f64>().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                row: Some(i + 2),
                col: Some(j + 1),
                msg: format!("non-numeric embedding value {:?}", &rec[j]),
            })?);
        }
    }
    if node_names.is_empty() {
        return Err(Error::invalid("empty embedding file"));
    }
    Ok(EmbeddingMatrix {
        node_names,
        dim,
        values,
        meta: None,
    })
}

/// Per-node input attributes for feature-level graphs: [column mean, column
/// std, |correlation with phenotype|, weighted degree], each column z-scored
/// across nodes (zero-std columns set to 0).
pub fn node_feature_matrix(g: &FeatureGraph, x: &OmicsMatrix, y: &PhenotypeVector) -> Result<Mat> {
    let target = y.numeric();
    if target.len() != x.n_subjects() {
        return Err(Error::invalid("matrix and phenotype subjects differ"));
    }
    let deg = g.weighted_degrees();
    let n = g.n_nodes();
    let mut raw = Mat::zeros(n, 4);
    for (i, name) in g.node_names.iter().enumerate() {
        let f = x
            .feature_index(name)
            .ok_or_else(|| Error::invalid(format!("graph node {name:?} missing from matrix")))?;
        let col = x.column(f);
        raw.set(i, 0, stats::mean(&col));
        raw.set(i, 1, stats::sample_std(&col));
        raw.set(i, 2, stats::pearson(&col, &target).abs());
        raw.set(i, 3, deg[i]);
    }
    // z-score each attribute column across nodes
    for c in 0..4 {
        let col: Vec<f64> = (0..n).map(|r| raw.get(r, c)).collect();
        let mu = stats::mean(&col);
        let sd = stats::sample_std(&col);
        for r in 0..n {
            let v = if sd > 0.0 {
                (raw.get(r, c) - mu) / sd
            } else {
                0.0
            };
            raw.set(r, c, v);
        }
    }
    Ok(raw)
}
