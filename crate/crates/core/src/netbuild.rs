//! Weighted feature-network construction: similarity, correlation,
//! WGCNA-style soft thresholding, kNN, shared-nearest-neighbor, and import of
//! precomputed edge lists.
//!
//! Graphs are undirected with canonical `i < j` edges, positive finite
//! weights, and no self-loops. Degenerate features (zero norm / zero
//! variance) stay in the graph as flagged isolated nodes so node indexing
//! keeps matching the omics matrix.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::ingest::{format_value, OmicsMatrix};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GraphMeta {
    pub method: String,
    pub params: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGraph {
    pub node_names: Vec<String>,
    /// Optional nodes x a attribute matrix, row-major.
    pub node_attrs: Option<(usize, Vec<f64>)>,
    /// Canonical edges: i < j, sorted by (i, j), weight > 0 and finite.
    pub edges: Vec<Edge>,
    /// Indices of degenerate nodes kept isolated (zero norm / zero variance).
    pub flagged: Vec<usize>,
    pub meta: GraphMeta,
}

impl FeatureGraph {
    pub fn new(node_names: Vec<String>, mut edges: Vec<Edge>, meta: GraphMeta) -> Result<Self> {
        let n = node_names.len();
        {
            let mut seen = BTreeSet::new();
            for name in &node_names {
                if !seen.insert(name.as_str()) {
                    return Err(Error::invalid(format!("duplicate node name {name:?}")));
                }
            }
        }
        for e in edges.iter_mut() {
            if e.i == e.j {
                return Err(Error::invalid(format!("self-loop on node {}", e.i)));
            }
            if e.i > e.j {
                std::mem::swap(&mut e.i, &mut e.j);
            }
            if e.i >= n || e.j >= n {
                return Err(Error::invalid(format!(
                    "edge ({}, {}) out of range",
                    e.i, e.j
                )));
            }
            if !(e.weight.is_finite() && e.weight > 0.0) {
                return Err(Error::invalid(format!(
                    "edge ({}, {}) has non-positive or non-finite weight {}",
                    e.i, e.j, e.weight
                )));
            }
        }
        edges.sort_by_key(|a| (a.i, a.j));
        for w in edges.windows(2) {
            if (w[0].i, w[0].j) == (w[1].i, w[1].j) {
                return Err(Error::invalid(format!(
                    "duplicate edge ({}, {})",
                    w[0].i, w[0].j
                )));
            }
        }
        Ok(FeatureGraph {
            node_names,
            node_attrs: None,
            edges,
            flagged: Vec::new(),
            meta,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.node_names.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Adjacency lists: for each node, (neighbor, weight) sorted by neighbor.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n_nodes()];
        for e in &self.edges {
            adj[e.i].push((e.j, e.weight));
            adj[e.j].push((e.i, e.weight));
        }
        for l in adj.iter_mut() {
            l.sort_by_key(|a| a.0);
        }
        adj
    }

    pub fn weighted_degrees(&self) -> Vec<f64> {
        let mut deg = vec![0.0; self.n_nodes()];
        for e in &self.edges {
            deg[e.i] += e.weight;
            deg[e.j] += e.weight;
        }
        deg
    }

    /// Induced subgraph on `keep` (indices into this graph). Node order in
    /// the result follows `keep`.
    pub fn induced_subgraph(&self, keep: &[usize]) -> Result<FeatureGraph> {
        let mut map = BTreeMap::new();
        for (new, &old) in keep.iter().enumerate() {
            if map.insert(old, new).is_some() {
                return Err(Error::invalid("duplicate node in subgraph selection"));
            }
        }
        let names = keep.iter().map(|&i| self.node_names[i].clone()).collect();
        let edges = self
            .edges
            .iter()
            .filter_map(|e| match (map.get(&e.i), map.get(&e.j)) {
                (Some(&a), Some(&b)) => Some(Edge {
                    i: a,
                    j: b,
                    weight: e.weight,
                }),
                _ => None,
            })
            .collect();
        let mut g = FeatureGraph::new(names, edges, self.meta.clone())?;
        g.meta
            .params
            .push(("subgraph".into(), format!("{}", keep.len())));
        Ok(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Cosine,
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prune {
    /// Remove edges with weight below the threshold.
    Threshold(f64),
    /// Keep only the top fraction (0, 1] of edges by weight.
    TopFraction(f64),
    None,
}

fn metric_name(m: Metric) -> &'static str {
    match m {
        Metric::Cosine => "cosine",
        Metric::Euclidean => "euclidean",
    }
}

/// Cosine similarity of two feature columns; None for a zero-norm side.
fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        None
    } else {
        Some(dot / (na * nb))
    }
}

/// Euclidean distance mapped to a (0, 1] similarity: 1 / (1 + d).
fn euclidean_similarity(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    1.0 / (1.0 + d)
}

fn apply_prune(mut edges: Vec<Edge>, prune: Prune) -> Vec<Edge> {
    match prune {
        Prune::None => edges,
        Prune::Threshold(tau) => edges.into_iter().filter(|e| e.weight >= tau).collect(),
        Prune::TopFraction(q) => {
            let keep = ((edges.len() as f64) * q).ceil() as usize;
            edges.sort_by(|a, b| {
                b.weight
                    .partial_cmp(&a.weight)
                    .unwrap()
                    .then_with(|| (a.i, a.j).cmp(&(b.i, b.j)))
            });
            edges.truncate(keep);
            edges
        }
    }
}

fn validate_prune(prune: Prune, metric: Metric) -> Result<()> {
    match (prune, metric) {
        (Prune::Threshold(t), Metric::Cosine) if !(-1.0..=1.0).contains(&t) => Err(Error::invalid(
            format!("threshold {t} outside cosine range [-1, 1]"),
        )),
        (Prune::Threshold(t), Metric::Euclidean) if !(0.0..=1.0).contains(&t) => {
            Err(Error::invalid(format!(
                "threshold {t} outside euclidean-similarity range [0, 1]"
            )))
        }
        (Prune::TopFraction(q), _) if !(q > 0.0 && q <= 1.0) => {
            Err(Error::invalid(format!("top fraction {q} outside (0, 1]")))
        }
        _ => Ok(()),
    }
}

/// Pairwise feature-vector similarity network. Non-positive similarities are
/// never edges; zero-norm features (cosine) become flagged isolated nodes.
pub fn similarity_network(x: &OmicsMatrix, metric: Metric, prune: Prune) -> Result<FeatureGraph> {
    if x.n_features() < 2 || x.n_subjects() < 2 {
        return Err(Error::invalid(
            "similarity_network needs >= 2 features and >= 2 subjects",
        ));
    }
    validate_prune(prune, metric)?;
    let nf = x.n_features();
    let cols: Vec<Vec<f64>> = (0..nf).map(|f| x.column(f)).collect();
    let mut flagged = Vec::new();
    if metric == Metric::Cosine {
        for (f, c) in cols.iter().enumerate() {
            if c.iter().map(|v| v * v).sum::<f64>() == 0.0 {
                flagged.push(f);
            }
        }
    }
    let mut edges = Vec::new();
    for i in 0..nf {
        for j in i + 1..nf {
            let w = match metric {
                Metric::Cosine => match cosine(&cols[i], &cols[j]) {
                    Some(w) => w,
                    None => continue,
                },
                Metric::Euclidean => euclidean_similarity(&cols[i], &cols[j]),
            };
            if w > 0.0 {
                edges.push(Edge {
                    i,
                    j,
                    weight: w.min(1.0 + 1e-12),
                });
            }
        }
    }
    let edges = apply_prune(edges, prune);
    let mut g = FeatureGraph::new(
        x.feature_names.clone(),
        edges,
        GraphMeta {
            method: format!("similarity:{}", metric_name(metric)),
            params: vec![("prune".into(), format!("{prune:?}"))],
        },
    )?;
    g.flagged = flagged;
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CorrMethod {
    Pearson,
    Spearman,
}

/// |correlation| network; zero-variance features are flagged isolated nodes.
pub fn correlation_network(
    x: &OmicsMatrix,
    method: CorrMethod,
    prune: Prune,
) -> Result<FeatureGraph> {
    if x.n_features() < 2 || x.n_subjects() < 2 {
        return Err(Error::invalid(
            "correlation_network needs >= 2 features and >= 2 subjects",
        ));
    }
    if let Prune::Threshold(t) = prune {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::invalid(format!(
                "threshold {t} outside |r| range [0, 1]"
            )));
        }
    }
    let nf = x.n_features();
    let cols: Vec<Vec<f64>> = (0..nf)
        .map(|f| {
            let c = x.column(f);
            match method {
                CorrMethod::Pearson => c,
                CorrMethod::Spearman => stats::average_ranks(&c),
            }
        })
        .collect();
    let flagged: Vec<usize> = (0..nf)
        .filter(|&f| stats::sample_variance(&cols[f]) <= 0.0)
        .collect();
    let degenerate: BTreeSet<usize> = flagged.iter().copied().collect();
    let mut edges = Vec::new();
    for i in 0..nf {
        for j in i + 1..nf {
            if degenerate.contains(&i) || degenerate.contains(&j) {
                continue;
            }
            let w = stats::pearson(&cols[i], &cols[j]).abs();
            if w > 0.0 {
                edges.push(Edge {
                    i,
                    j,
                    weight: w.min(1.0 + 1e-12),
                });
            }
        }
    }
    let edges = apply_prune(edges, prune);
    let mut g = FeatureGraph::new(
        x.feature_names.clone(),
        edges,
        GraphMeta {
            method: match method {
                CorrMethod::Pearson => "correlation:pearson".into(),
                CorrMethod::Spearman => "correlation:spearman".into(),
            },
            params: vec![("prune".into(), format!("{prune:?}"))],
        },
    )?;
    g.flagged = flagged;
    Ok(g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleFreeFit {
    /// (beta, R^2 of the log-log degree fit; None when the fit is undefined)
    pub per_beta: Vec<(f64, Option<f64>)>,
    pub chosen_beta: f64,
    pub chosen_r2: f64,
    /// true when no grid value reached the target and the max-R^2 beta was used
    pub below_target: bool,
}

/// Scale-free fit R^2: regress log10(frequency) on log10(connectivity) over
/// log-spaced degree bins. None when fewer than 3 non-empty bins remain or
/// connectivity is single-valued.
pub fn scale_free_r2(connectivity: &[f64], n_bins: usize) -> Option<f64> {
    let ks: Vec<f64> = connectivity.iter().copied().filter(|&k| k > 0.0).collect();
    if ks.len() < 3 {
        return None;
    }
    let kmin = ks.iter().cloned().fold(f64::INFINITY, f64::min);
    let kmax = ks.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if kmax <= kmin {
        return None;
    }
    let (lmin, lmax) = (kmin.log10(), kmax.log10());
    let mut counts = vec![0usize; n_bins];
    let mut sums = vec![0.0; n_bins];
    for &k in &ks {
        let mut b = (((k.log10() - lmin) / (lmax - lmin)) * n_bins as f64).floor() as usize;
        if b >= n_bins {
            b = n_bins - 1;
        }
        counts[b] += 1;
        sums[b] += k;
    }
    let total = ks.len() as f64;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for b in 0..n_bins {
        if counts[b] > 0 {
            xs.push((sums[b] / counts[b] as f64).log10());
            ys.push((counts[b] as f64 / total).log10());
        }
    }
    if xs.len() < 3 {
        return None;
    }
    // OLS of y on x
    let mx = stats::mean(&xs);
    let my = stats::mean(&ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let pred = my + slope * (x - mx);
            (y - pred) * (y - pred)
        })
        .sum();
    Some(1.0 - ss_res / syy)
}

/// WGCNA-style soft-threshold network: a_ij = |r_ij|^beta, with beta the
/// smallest grid value whose scale-free fit reaches `target_r2` (max-R^2
/// fallback, flagged).
pub fn soft_threshold_network(
    x: &OmicsMatrix,
    beta_grid: &[f64],
    target_r2: f64,
) -> Result<(FeatureGraph, ScaleFreeFit)> {
    if beta_grid.is_empty() {
        return Err(Error::invalid("empty beta grid"));
    }
    if beta_grid.iter().any(|&b| !(b.is_finite() && b > 0.0)) {
        return Err(Error::invalid("beta grid values must be positive"));
    }
    let base = correlation_network(x, CorrMethod::Pearson, Prune::None)?;
    let nf = x.n_features();

    let connectivity = |beta: f64| -> Vec<f64> {
        let mut k = vec![0.0; nf];
        for e in &base.edges {
            let a = e.weight.powf(beta);
            k[e.i] += a;
            k[e.j] += a;
        }
        k
    };

    let mut per_beta = Vec::new();
    for &b in beta_grid {
        per_beta.push((b, scale_free_r2(&connectivity(b), 10)));
    }
    if per_beta.iter().all(|(_, r2)| r2.is_none()) {
        return Err(Error::invalid(
            "scale-free fit undefined for every beta (degenerate degree distribution, e.g. a single connectivity value)",
        ));
    }
    let qualifying = per_beta
        .iter()
        .find(|(_, r2)| r2.is_some_and(|v| v >= target_r2));
    let (chosen_beta, chosen_r2, below_target) = match qualifying {
        Some(&(b, Some(r2))) => (b, r2, false),
        _ => {
            let best = per_beta
                .iter()
                .filter_map(|&(b, r2)| r2.map(|v| (b, v)))
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            (best.0, best.1, true)
        }
    };

    let edges: Vec<Edge> = base
        .edges
        .iter()
        .map(|e| Edge {
            i: e.i,
            j: e.j,
            weight: e.weight.powf(chosen_beta),
        })
        .filter(|e| e.weight > 0.0)
        .collect();
    let mut g = FeatureGraph::new(
        x.feature_names.clone(),
        edges,
        GraphMeta {
            method: "soft_threshold".into(),
            params: vec![
                ("beta".into(), format!("{chosen_beta}")),
                ("r2".into(), format!("{chosen_r2}")),
            ],
        },
    )?;
    g.flagged = base.flagged.clone();
    Ok((
        g,
        ScaleFreeFit {
            per_beta,
            chosen_beta,
            chosen_r2,
            below_target,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KnnMode {
    /// Keep an edge when either endpoint selects the other.
    Union,
    /// Keep an edge only when both endpoints select each other.
    Mutual,
}

/// Per-node top-k neighbor selections by similarity, ties at the k-th rank
/// broken by feature name. Degenerate (zero-norm cosine) nodes select nothing
/// and are never selected.
/// (per-node selected neighbor indices, matching similarities, flagged nodes)
type KnnSelections = (Vec<Vec<usize>>, Vec<Vec<f64>>, Vec<usize>);

fn knn_selections(x: &OmicsMatrix, k: usize, metric: Metric) -> Result<KnnSelections> {
    let nf = x.n_features();
    if k == 0 || k >= nf {
        return Err(Error::invalid(format!("k = {k} must satisfy 0 < k < {nf}")));
    }
    let cols: Vec<Vec<f64>> = (0..nf).map(|f| x.column(f)).collect();
    let mut flagged = Vec::new();
    if metric == Metric::Cosine {
        for (f, c) in cols.iter().enumerate() {
            if c.iter().map(|v| v * v).sum::<f64>() == 0.0 {
                flagged.push(f);
            }
        }
    }
    let bad: BTreeSet<usize> = flagged.iter().copied().collect();
    let mut sim = vec![vec![f64::NAN; nf]; nf];
    for i in 0..nf {
        for j in i + 1..nf {
            if bad.contains(&i) || bad.contains(&j) {
                continue;
            }
            let w = match metric {
                Metric::Cosine => cosine(&cols[i], &cols[j]).unwrap(),
                Metric::Euclidean => euclidean_similarity(&cols[i], &cols[j]),
            };
            sim[i][j] = w;
            sim[j][i] = w;
        }
    }
    let mut selections = vec![Vec::new(); nf];
    for i in 0..nf {
        if bad.contains(&i) {
            continue;
        }
        let mut cands: Vec<usize> = (0..nf).filter(|&j| j != i && !bad.contains(&j)).collect();
        cands.sort_by(|&a, &b| {
            sim[i][b]
                .partial_cmp(&sim[i][a])
                .unwrap()
                .then_with(|| x.feature_names[a].cmp(&x.feature_names[b]))
        });
        cands.truncate(k.min(cands.len()));
        selections[i] = cands;
    }
    Ok((selections, sim, flagged))
}

/// k-nearest-neighbor similarity network, union-symmetrized by default.
pub fn knn_graph(x: &OmicsMatrix, k: usize, metric: Metric, mode: KnnMode) -> Result<FeatureGraph> {
    let (selections, sim, flagged) = knn_selections(x, k, metric)?;
    let nf = x.n_features();
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (i, sel) in selections.iter().enumerate() {
        for &j in sel {
            let key = (i.min(j), i.max(j));
            match mode {
                KnnMode::Union => {
                    pairs.insert(key);
                }
                KnnMode::Mutual => {
                    if selections[j].contains(&i) {
                        pairs.insert(key);
                    }
                }
            }
        }
    }
    let edges: Vec<Edge> = pairs
        .into_iter()
        .filter(|&(i, j)| sim[i][j] > 0.0)
        .map(|(i, j)| Edge {
            i,
            j,
            weight: sim[i][j].min(1.0 + 1e-12),
        })
        .collect();
    let _ = nf;
    let mut g = FeatureGraph::new(
        x.feature_names.clone(),
        edges,
        GraphMeta {
            method: format!("knn:{}", metric_name(metric)),
            params: vec![
                ("k".into(), k.to_string()),
                ("mode".into(), format!("{mode:?}")),
            ],
        },
    )?;
    g.flagged = flagged;
    Ok(g)
}

/// Number of neighbors each node selects pre-symmetrization; used by tests.
pub fn knn_selection_sizes(x: &OmicsMatrix, k: usize, metric: Metric) -> Result<Vec<usize>> {
    let (selections, _, _) = knn_selections(x, k, metric)?;
    Ok(selections.iter().map(|s| s.len()).collect())
}

/// Shared-nearest-neighbor network: weight(i, j) = Jaccard overlap of the two
/// cosine k-NN selection lists; zero-overlap pairs have no edge.
pub fn snn_graph(x: &OmicsMatrix, k: usize) -> Result<FeatureGraph> {
    let (selections, _, flagged) = knn_selections(x, k, Metric::Cosine)?;
    let nf = x.n_features();
    let sets: Vec<BTreeSet<usize>> = selections
        .iter()
        .map(|s| s.iter().copied().collect())
        .collect();
    let bad: BTreeSet<usize> = flagged.iter().copied().collect();
    let mut edges = Vec::new();
    for i in 0..nf {
        for j in i + 1..nf {
            if bad.contains(&i) || bad.contains(&j) {
                continue;
            }
            let inter = sets[i].intersection(&sets[j]).count();
            if inter == 0 {
                continue;
            }
            let union = sets[i].union(&sets[j]).count();
            edges.push(Edge {
                i,
                j,
                weight: inter as f64 / union as f64,
            });
        }
    }
    let mut g = FeatureGraph::new(
        x.feature_names.clone(),
        edges,
        GraphMeta {
            method: "snn".into(),
            params: vec![("k".into(), k.to_string())],
        },
    )?;
    g.flagged = flagged;
    Ok(g)
}

/// Edge-list CSV export: header `source,target,weight`, pairs canonicalized by
/// lexicographic name order and rows sorted so export -> import -> export is
/// byte-identical.
pub fn write_edge_list(g: &FeatureGraph, path: impl AsRef<Path>) -> Result<()> {
    let mut rows: Vec<(&str, &str, f64)> = g
        .edges
        .iter()
        .map(|e| {
            let (a, b) = (g.node_names[e.i].as_str(), g.node_names[e.j].as_str());
            if a <= b {
                (a, b, e.weight)
            } else {
                (b, a, e.weight)
            }
        })
        .collect();
    rows.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(["source", "target", "weight"])?;
    for (a, b, wt) in rows {
        w.write_record([a, b, &format_value(wt)])?;
    }
    w.flush()?;
    Ok(())
}

/// Node-order sidecar: one node name per line, in graph order.
pub fn write_node_order(g: &FeatureGraph, path: impl AsRef<Path>) -> Result<()> {
    let mut s = String::new();
    for n in &g.node_names {
        s.push_str(n);
        s.push('\n');
    }
    std::fs::write(path.as_ref(), s)?;
    Ok(())
}

pub fn read_node_order(path: impl AsRef<Path>) -> Result<Vec<String>> {
    Ok(std::fs::read_to_string(path.as_ref())?
        .lines()
        .filter(|l| !l.is_empty())
        .map(|l| l.to_string())
        .collect())
}

/// Import a `source,target,weight` edge list. With a node list, the graph
/// uses that order and unknown names are errors; without one, nodes are
/// sorted lexicographically. Duplicate pairs with differing weights and
/// self-loops are errors.
pub fn import_network(path: impl AsRef<Path>, nodes: Option<&[String]>) -> Result<FeatureGraph> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let mut raw: Vec<(String, String, f64)> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() != 3 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row: Some(i + 2),
                col: None,
                msg: "expected source,target,weight".into(),
            });
        }
        let w: f64 = rec[2].parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            row: Some(i + 2),
            col: Some(3),
            msg: format!("non-numeric weight {:?}", &rec[2]),
        })?;
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::invalid(format!(
                "non-positive weight {w} on edge ({:?}, {:?})",
                &rec[0], &rec[1]
            )));
        }
        if rec[0] == rec[1] {
            return Err(Error::invalid(format!("self-loop on node {:?}", &rec[0])));
        }
        raw.push((rec[0].to_string(), rec[1].to_string(), w));
    }
    let node_names: Vec<String> = match nodes {
        Some(n) => n.to_vec(),
        None => {
            let mut set = BTreeSet::new();
            for (a, b, _) in &raw {
                set.insert(a.clone());
                set.insert(b.clone());
            }
            set.into_iter().collect()
        }
    };
    let index: BTreeMap<&str, usize> = node_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let mut seen: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (a, b, w) in &raw {
        let ia = *index
            .get(a.as_str())
            .ok_or_else(|| Error::invalid(format!("unknown node name {a:?}")))?;
        let ib = *index
            .get(b.as_str())
            .ok_or_else(|| Error::invalid(format!("unknown node name {b:?}")))?;
        let key = (ia.min(ib), ia.max(ib));
        if let Some(&prev) = seen.get(&key) {
            if prev != *w {
                return Err(Error::invalid(format!(
                    "duplicate edge ({a:?}, {b:?}) with differing weights {prev} and {w}"
                )));
            }
        } else {
            seen.insert(key, *w);
        }
    }
    let edges = seen
        .into_iter()
        .map(|((i, j), weight)| Edge { i, j, weight })
        .collect();
    FeatureGraph::new(
        node_names,
        edges,
        GraphMeta {
            method: "import".into(),
            params: vec![("path".into(), path.display().to_string())],
        },
    )
}
