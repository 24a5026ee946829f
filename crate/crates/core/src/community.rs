//! Subgraph detection: weighted-modularity Louvain, personalized PageRank,
//! and a phenotype-seeded PPR -> Louvain hybrid.

use std::collections::BTreeMap;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ingest::{format_value, OmicsMatrix, PhenotypeVector};
use crate::netbuild::FeatureGraph;
use crate::stats;

/// Node -> community assignment with its modularity. Community IDs are
/// contiguous from 0 in order of first occurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub assignment: Vec<usize>,
    pub modularity: f64,
    pub method: String,
}

impl Partition {
    pub fn n_communities(&self) -> usize {
        self.assignment.iter().copied().max().map_or(0, |m| m + 1)
    }
}

fn relabel_contiguous(assignment: &mut [usize]) {
    let mut map = BTreeMap::new();
    let mut next = 0usize;
    for a in assignment.iter_mut() {
        let id = *map.entry(*a).or_insert_with(|| {
            let v = next;
            next += 1;
            v
        });
        *a = id;
    }
}

/// Weighted Newman modularity: Q = sum_c [ W_c/W - gamma (S_c / 2W)^2 ],
/// W = total edge weight, W_c = intra-community weight, S_c = community
/// degree sum.
pub fn modularity_with_resolution(
    g: &FeatureGraph,
    assignment: &[usize],
    resolution: f64,
) -> Result<f64> {
    if g.n_nodes() == 0 {
        return Err(Error::invalid("empty graph"));
    }
    if assignment.len() != g.n_nodes() {
        return Err(Error::invalid("partition does not cover all nodes"));
    }
    let w_total = g.total_weight();
    if w_total <= 0.0 {
        return Err(Error::invalid("graph has no edges"));
    }
    let n_comm = assignment.iter().max().unwrap() + 1;
    let mut intra = vec![0.0; n_comm];
    let mut degsum = vec![0.0; n_comm];
    for e in &g.edges {
        if assignment[e.i] == assignment[e.j] {
            intra[assignment[e.i]] += e.weight;
        }
        degsum[assignment[e.i]] += e.weight;
        degsum[assignment[e.j]] += e.weight;
    }
    let mut q = 0.0;
    for c in 0..n_comm {
        let frac = degsum[c] / (2.0 * w_total);
        q += intra[c] / w_total - resolution * frac * frac;
    }
    Ok(q)
}

pub fn modularity(g: &FeatureGraph, p: &Partition) -> Result<f64> {
    modularity_with_resolution(g, &p.assignment, 1.0)
}

/// Aggregated working graph for the Louvain phases. Self-weight holds
/// intra-community weight folded in during aggregation.
struct WorkGraph {
    /// adjacency (neighbor, weight), no self entries
    adj: Vec<Vec<(usize, f64)>>,
    self_weight: Vec<f64>,
    total_weight: f64,
}

impl WorkGraph {
    fn n(&self) -> usize {
        self.adj.len()
    }

    fn degree(&self, u: usize) -> f64 {
        self.adj[u].iter().map(|&(_, w)| w).sum::<f64>() + 2.0 * self.self_weight[u]
    }
}

const GAIN_EPS: f64 = 1e-12;

/// One local-move phase; returns the community of each node and whether any
/// move happened.
fn local_moves(g: &WorkGraph, rng: &mut ChaCha8Rng, resolution: f64) -> (Vec<usize>, bool) {
    let n = g.n();
    let mut community: Vec<usize> = (0..n).collect();
    let mut comm_degree: Vec<f64> = (0..n).map(|u| g.degree(u)).collect();
    let node_degree = comm_degree.clone();
    let two_w = 2.0 * g.total_weight;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut improved = false;
    loop {
        let mut moved = false;
        for &u in &order {
            let cu = community[u];
            // weight from u to each neighboring community
            let mut links: BTreeMap<usize, f64> = BTreeMap::new();
            for &(v, w) in &g.adj[u] {
                *links.entry(community[v]).or_insert(0.0) += w;
            }
            comm_degree[cu] -= node_degree[u];
            let base_link = links.get(&cu).copied().unwrap_or(0.0);
            let gain = |c: usize, link: f64| {
                link / g.total_weight
                    - resolution * 2.0 * comm_degree[c] * node_degree[u] / (two_w * two_w)
            };
            let stay = gain(cu, base_link);
            let mut best_c = cu;
            let mut best_gain = stay;
            for (&c, &link) in &links {
                if c == cu {
                    continue;
                }
                let gn = gain(c, link);
                if gn > best_gain + GAIN_EPS || (gn > best_gain && c < best_c) {
                    best_c = c;
                    best_gain = gn;
                }
            }
            comm_degree[best_c] += node_degree[u];
            if best_c != cu {
                community[u] = best_c;
                moved = true;
                improved = true;
            }
        }
        if !moved {
            break;
        }
    }
    (community, improved)
}

/// Collapse communities into super-nodes; `mapping` gives each old node's new
/// community index (already contiguous).
fn aggregate(g: &WorkGraph, mapping: &[usize]) -> WorkGraph {
    let n_new = mapping.iter().max().map_or(0, |m| m + 1);
    let mut self_weight = vec![0.0; n_new];
    let mut pair: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for u in 0..g.n() {
        self_weight[mapping[u]] += g.self_weight[u];
        for &(v, w) in &g.adj[u] {
            if u < v {
                let (a, b) = (mapping[u], mapping[v]);
                if a == b {
                    self_weight[a] += w;
                } else {
                    *pair.entry((a.min(b), a.max(b))).or_insert(0.0) += w;
                }
            }
        }
    }
    let mut adj = vec![Vec::new(); n_new];
    for (&(a, b), &w) in &pair {
        adj[a].push((b, w));
        adj[b].push((a, w));
    }
    WorkGraph {
        adj,
        self_weight,
        total_weight: g.total_weight,
    }
}

/// Two-phase Louvain modularity maximization. Node visit order is shuffled by
/// `seed`; with a fixed seed the result is fully deterministic.
pub fn louvain(g: &FeatureGraph, seed: u64, resolution: f64) -> Result<Partition> {
    if g.n_edges() == 0 {
        return Err(Error::invalid("louvain needs at least one edge"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut work = WorkGraph {
        adj: g.adjacency(),
        self_weight: vec![0.0; g.n_nodes()],
        total_weight: g.total_weight(),
    };
    // node -> current community in original index space
    let mut assignment: Vec<usize> = (0..g.n_nodes()).collect();
    let mut q_prev = modularity_with_resolution(g, &assignment, resolution)?;

    loop {
        let (mut local, improved) = local_moves(&work, &mut rng, resolution);
        if !improved {
            break;
        }
        relabel_contiguous(&mut local);
        for a in assignment.iter_mut() {
            *a = local[*a];
        }
        let q_now = modularity_with_resolution(g, &assignment, resolution)?;
        if q_now - q_prev <= GAIN_EPS {
            break;
        }
        q_prev = q_now;
        work = aggregate(&work, &local);
    }
    relabel_contiguous(&mut assignment);
    let q = modularity_with_resolution(g, &assignment, resolution)?;
    Ok(Partition {
        assignment,
        modularity: q,
        method: "louvain".into(),
    })
}

/// Personalized PageRank scores with restart to a seed distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct PprVector {
    pub seeds: Vec<(usize, f64)>,
    pub damping: f64,
    pub scores: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Power iteration for p = (1-d) s + d W^T p on the weight-normalized
/// transition matrix; dangling-node mass teleports to the seeds.
pub fn personalized_pagerank(
    g: &FeatureGraph,
    seeds: &[(usize, f64)],
    damping: f64,
    tol: f64,
    max_iter: usize,
) -> Result<PprVector> {
    let n = g.n_nodes();
    if n == 0 {
        return Err(Error::invalid("empty graph"));
    }
    if !(damping > 0.0 && damping < 1.0) {
        return Err(Error::invalid(format!("damping {damping} outside (0, 1)")));
    }
    let mut s = vec![0.0; n];
    for &(i, w) in seeds {
        if i >= n {
            return Err(Error::invalid(format!("seed node {i} out of range")));
        }
        if w < 0.0 {
            return Err(Error::invalid("negative seed weight"));
        }
        s[i] += w;
    }
    let mass: f64 = s.iter().sum();
    if (mass - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "seed weights sum to {mass}, expected 1"
        )));
    }

    let adj = g.adjacency();
    let deg = g.weighted_degrees();
    let mut p = s.clone();
    for it in 0..max_iter {
        let mut next = vec![0.0; n];
        let mut dangling = 0.0;
        for u in 0..n {
            if deg[u] > 0.0 {
                for &(v, w) in &adj[u] {
                    next[v] += p[u] * w / deg[u];
                }
            } else {
                dangling += p[u];
            }
        }
        let mut residual = 0.0;
        for v in 0..n {
            let val = (1.0 - damping) * s[v] + damping * (next[v] + dangling * s[v]);
            residual += (val - p[v]).abs();
            next[v] = val;
        }
        p = next;
        if residual < tol {
            return Ok(PprVector {
                seeds: seeds.to_vec(),
                damping,
                scores: p,
                iterations: it + 1,
                residual,
            });
        }
    }
    Err(Error::numeric(format!(
        "personalized pagerank did not converge in {max_iter} iterations"
    )))
}

/// Output of the PPR-seeded hybrid: the retained high-mass node set (indices
/// into the original graph) and the Louvain partition of its induced
/// subgraph.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridResult {
    pub retained: Vec<usize>,
    pub retained_mass: f64,
    pub ppr: PprVector,
    pub subgraph: FeatureGraph,
    pub partition: Partition,
}

/// Seed PPR with normalized |correlation(feature, phenotype)|, keep the
/// smallest node set holding >= `mass_fraction` of PPR mass (descending
/// score, ties by name), and run Louvain on the induced subgraph.
pub fn hybrid_ppr_louvain(
    g: &FeatureGraph,
    x: &OmicsMatrix,
    y: &PhenotypeVector,
    mass_fraction: f64,
    seed: u64,
) -> Result<HybridResult> {
    if !(mass_fraction > 0.0 && mass_fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "mass_fraction {mass_fraction} outside (0, 1]"
        )));
    }
    let target = y.numeric();
    if target.len() != x.n_subjects() {
        return Err(Error::invalid("matrix and phenotype subjects differ"));
    }
    let mut weights = Vec::with_capacity(g.n_nodes());
    for name in &g.node_names {
        let f = x
            .feature_index(name)
            .ok_or_else(|| Error::invalid(format!("graph node {name:?} missing from matrix")))?;
        weights.push(stats::pearson(&x.column(f), &target).abs());
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::invalid(
            "all feature-phenotype correlations are zero; nothing to seed",
        ));
    }
    let seeds: Vec<(usize, f64)> = weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(i, &w)| (i, w / total))
        .collect();
    let ppr = personalized_pagerank(g, &seeds, 0.85, 1e-10, 1000)?;

    let mut order: Vec<usize> = (0..g.n_nodes()).collect();
    order.sort_by(|&a, &b| {
        ppr.scores[b]
            .partial_cmp(&ppr.scores[a])
            .unwrap()
            .then_with(|| g.node_names[a].cmp(&g.node_names[b]))
    });
    let mut retained = Vec::new();
    let mut mass = 0.0;
    for &i in &order {
        if mass >= mass_fraction {
            break;
        }
        if ppr.scores[i] <= 0.0 {
            break;
        }
        retained.push(i);
        mass += ppr.scores[i];
    }
    retained.sort_unstable();
    let subgraph = g.induced_subgraph(&retained)?;
    let partition = louvain(&subgraph, seed, 1.0)?;
    Ok(HybridResult {
        retained,
        retained_mass: mass,
        ppr,
        subgraph,
        partition,
    })
}

/// Adjusted Rand Index between two labelings of the same nodes.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0u64; kb]; ka];
    for i in 0..n {
        table[a[i]][b[i]] += 1;
    }
    let choose2 = |x: u64| (x * x.saturating_sub(1)) as f64 / 2.0;
    let sum_ij: f64 = table.iter().flatten().map(|&c| choose2(c)).sum();
    let sum_a: f64 = (0..ka).map(|i| choose2(table[i].iter().sum::<u64>())).sum();
    let sum_b: f64 = (0..kb)
        .map(|j| choose2((0..ka).map(|i| table[i][j]).sum::<u64>()))
        .sum();
    let total = choose2(n as u64);
    let expected = sum_a * sum_b / total;
    let max_index = (sum_a + sum_b) / 2.0;
    if (max_index - expected).abs() < 1e-15 {
        return 1.0;
    }
    (sum_ij - expected) / (max_index - expected)
}

pub fn write_partition_csv(g: &FeatureGraph, p: &Partition, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(["node", "community"])?;
    for (i, name) in g.node_names.iter().enumerate() {
        w.write_record([name.as_str(), &p.assignment[i].to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ppr_csv(g: &FeatureGraph, p: &PprVector, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(["node", "score"])?;
    for (i, name) in g.node_names.iter().enumerate() {
        w.write_record([name.as_str(), &format_value(p.scores[i])])?;
    }
    w.flush()?;
    Ok(())
}
