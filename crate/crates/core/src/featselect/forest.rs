//! Random forest of CART trees, used only for impurity-based feature
//! importance. Classification trees split on Gini impurity, regression trees
//! on variance reduction. Everything is seeded and deterministic; per-tree
//! seeds are `seed + tree_index`.
//!
//! Candidate features at each split are chosen by hashing the feature *name*
//! with the tree seed and a node counter, so permuting matrix columns permutes
//! importances identically.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fnv1a;
use crate::ingest::{OmicsMatrix, PhenotypeValues, PhenotypeVector};

#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: None,
            min_leaf: 1,
            seed: 0,
        }
    }
}

enum Target {
    Classes {
        labels: Vec<usize>,
        n_classes: usize,
    },
    Values(Vec<f64>),
}

impl Target {
    /// Node impurity over the given sample indices: Gini for classes,
    /// variance (biased, divisor n) for values.
    fn impurity(&self, samples: &[usize]) -> f64 {
        let n = samples.len() as f64;
        match self {
            Target::Classes { labels, n_classes } => {
                let mut counts = vec![0usize; *n_classes];
                for &s in samples {
                    counts[labels[s]] += 1;
                }
                1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
            }
            Target::Values(v) => {
                let mu = samples.iter().map(|&s| v[s]).sum::<f64>() / n;
                samples.iter().map(|&s| (v[s] - mu).powi(2)).sum::<f64>() / n
            }
        }
    }

    fn is_pure(&self, samples: &[usize]) -> bool {
        match self {
            Target::Classes { labels, .. } => {
                samples.windows(2).all(|w| labels[w[0]] == labels[w[1]])
            }
            Target::Values(v) => samples.windows(2).all(|w| v[w[0]] == v[w[1]]),
        }
    }
}

struct TreeBuilder<'a> {
    x: &'a OmicsMatrix,
    target: &'a Target,
    config: &'a ForestConfig,
    tree_seed: u64,
    n_candidates: usize,
    node_counter: u64,
    /// accumulated (n_node / n_root) * impurity-decrease per feature
    importance: Vec<f64>,
    n_root: f64,
}

struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl<'a> TreeBuilder<'a> {
    /// The sqrt(p) candidate features for this node, ordered by name so
    /// tie-breaking is column-index independent.
    fn candidates(&mut self) -> Vec<usize> {
        let node = self.node_counter;
        self.node_counter += 1;
        let mut keyed: Vec<(u64, usize)> = self
            .x
            .feature_names
            .iter()
            .enumerate()
            .map(|(i, name)| {
                (
                    fnv1a(&[
                        &self.tree_seed.to_le_bytes(),
                        &node.to_le_bytes(),
                        name.as_bytes(),
                    ]),
                    i,
                )
            })
            .collect();
        keyed.sort_by(|a, b| {
            a.0.cmp(&b.0)
                .then_with(|| self.x.feature_names[a.1].cmp(&self.x.feature_names[b.1]))
        });
        let mut chosen: Vec<usize> = keyed[..self.n_candidates].iter().map(|&(_, i)| i).collect();
        chosen.sort_by(|&a, &b| self.x.feature_names[a].cmp(&self.x.feature_names[b]));
        chosen
    }

    fn best_split(&mut self, samples: &[usize]) -> Option<Split> {
        let parent = self.target.impurity(samples);
        let n = samples.len() as f64;
        let mut best: Option<Split> = None;
        for f in self.candidates() {
            // (value, sample) sorted by value, stable in sample order
            let mut pairs: Vec<(f64, usize)> =
                samples.iter().map(|&s| (self.x.get(s, f), s)).collect();
            pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then_with(|| a.1.cmp(&b.1)));

            for cut in 1..pairs.len() {
                if pairs[cut].0 == pairs[cut - 1].0 {
                    continue;
                }
                if cut < self.config.min_leaf || pairs.len() - cut < self.config.min_leaf {
                    continue;
                }
                let left: Vec<usize> = pairs[..cut].iter().map(|&(_, s)| s).collect();
                let right: Vec<usize> = pairs[cut..].iter().map(|&(_, s)| s).collect();
                let gain = parent
                    - (left.len() as f64 / n) * self.target.impurity(&left)
                    - (right.len() as f64 / n) * self.target.impurity(&right);
                if gain > 1e-12 && best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(Split {
                        feature: f,
                        threshold: (pairs[cut - 1].0 + pairs[cut].0) / 2.0,
                        gain,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, samples: Vec<usize>, depth: usize) {
        if samples.len() < 2 * self.config.min_leaf
            || samples.len() < 2
            || self.target.is_pure(&samples)
            || self.config.max_depth.is_some_and(|d| depth >= d)
        {
            return;
        }
        let Some(split) = self.best_split(&samples) else {
            return;
        };
        self.importance[split.feature] += (samples.len() as f64 / self.n_root) * split.gain;
        let (left, right): (Vec<usize>, Vec<usize>) = samples
            .into_iter()
            .partition(|&s| self.x.get(s, split.feature) <= split.threshold);
        self.grow(left, depth + 1);
        self.grow(right, depth + 1);
    }
}

/// Raw (unnormalized-then-normalized) mean-decrease-in-impurity importance,
/// one value per matrix column, summing to 1.
pub fn importance(x: &OmicsMatrix, y: &PhenotypeVector, config: &ForestConfig) -> Result<Vec<f64>> {
    if config.n_trees == 0 {
        return Err(Error::invalid("forest needs at least one tree"));
    }
    let target = match &y.values {
        PhenotypeValues::Categorical {
            class_names,
            labels,
        } => Target::Classes {
            labels: labels.clone(),
            n_classes: class_names.len(),
        },
        PhenotypeValues::Continuous(v) => Target::Values(v.clone()),
    };
    let ns = x.n_subjects();
    let p = x.n_features();
    let n_candidates = ((p as f64).sqrt().floor() as usize).max(1);

    let mut total = vec![0.0; p];
    for t in 0..config.n_trees {
        let tree_seed = config.seed.wrapping_add(t as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(tree_seed);
        let bootstrap: Vec<usize> = (0..ns).map(|_| rng.gen_range(0..ns)).collect();
        let mut builder = TreeBuilder {
            x,
            target: &target,
            config,
            tree_seed,
            n_candidates,
            node_counter: 0,
            importance: vec![0.0; p],
            n_root: ns as f64,
        };
        builder.grow(bootstrap, 0);
        for (acc, v) in total.iter_mut().zip(&builder.importance) {
            *acc += v / config.n_trees as f64;
        }
    }
    let sum: f64 = total.iter().sum();
    if sum <= 0.0 {
        // nothing split anywhere (e.g. constant outcome): uniform by convention
        return Ok(vec![1.0 / p as f64; p]);
    }
    Ok(total.into_iter().map(|v| v / sum).collect())
}
