//! Per-modality feature ranking: variance, one-way ANOVA F, correlation
//! against a continuous outcome, and random-forest impurity importance.

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ingest::{format_value, OmicsMatrix, PhenotypeValues, PhenotypeVector};
use crate::stats;

pub mod forest;

pub use forest::ForestConfig;

/// One scored feature. Ranks are 1-based, scores non-increasing with rank,
/// ties broken by feature name. `degenerate` marks sentinel scores
/// (zero within-group variance, zero-variance features).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScore {
    pub feature_name: String,
    pub score: f64,
    pub rank: usize,
    pub degenerate: bool,
}

/// Sort by (score desc, name asc) and assign 1-based ranks. +inf sentinels
/// sort above all finite scores.
fn rank_scores(mut raw: Vec<(String, f64, bool)>) -> Vec<FeatureScore> {
    raw.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    raw.into_iter()
        .enumerate()
        .map(|(i, (feature_name, score, degenerate))| FeatureScore {
            feature_name,
            score,
            rank: i + 1,
            degenerate,
        })
        .collect()
}

/// Unsupervised ranking by sample variance (divisor N-1).
pub fn variance_scores(x: &OmicsMatrix) -> Result<Vec<FeatureScore>> {
    if x.n_subjects() < 2 {
        return Err(Error::invalid("variance_scores needs at least 2 subjects"));
    }
    let raw = x
        .feature_names
        .iter()
        .enumerate()
        .map(|(f, name)| {
            let v = stats::sample_variance(&x.column(f));
            (name.clone(), v, false)
        })
        .collect();
    Ok(rank_scores(raw))
}

/// Group labels for the F test: categorical labels directly, continuous
/// outcomes discretized into quartile bins.
fn anova_groups(y: &PhenotypeVector) -> (Vec<usize>, usize) {
    match &y.values {
        PhenotypeValues::Categorical {
            class_names,
            labels,
        } => (labels.clone(), class_names.len()),
        PhenotypeValues::Continuous(v) => {
            let q = stats::quartiles(v);
            let labels = v
                .iter()
                .map(|&x| {
                    if x <= q[0] {
                        0
                    } else if x <= q[1] {
                        1
                    } else if x <= q[2] {
                        2
                    } else {
                        3
                    }
                })
                .collect();
            (labels, 4)
        }
    }
}

/// One-way ANOVA F = MSB/MSW per feature. Zero within-group variance yields a
/// +inf sentinel (ranked first, flagged degenerate); a feature with no
/// between- or within-group variance scores 0 and is flagged.
pub fn anova_f_scores(x: &OmicsMatrix, y: &PhenotypeVector) -> Result<Vec<FeatureScore>> {
    if x.subject_ids != y.subject_ids {
        return Err(Error::invalid("matrix and phenotype subjects differ"));
    }
    let (groups, k) = anova_groups(y);
    let n = x.n_subjects();
    let mut counts = vec![0usize; k];
    for &g in &groups {
        counts[g] += 1;
    }
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::invalid("ANOVA needs at least 2 non-empty groups"));
    }
    let k_eff = counts.iter().filter(|&&c| c > 0).count();
    if n <= k_eff {
        return Err(Error::invalid("ANOVA needs more subjects than groups"));
    }

    let mut raw = Vec::with_capacity(x.n_features());
    for (f, name) in x.feature_names.iter().enumerate() {
        let col = x.column(f);
        let grand = stats::mean(&col);
        let mut sums = vec![0.0; k];
        for (s, &g) in groups.iter().enumerate() {
            sums[g] += col[s];
        }
        let mut ssb = 0.0;
        for g in 0..k {
            if counts[g] > 0 {
                let m = sums[g] / counts[g] as f64;
                ssb += counts[g] as f64 * (m - grand) * (m - grand);
            }
        }
        let mut ssw = 0.0;
        for (s, &g) in groups.iter().enumerate() {
            let m = sums[g] / counts[g] as f64;
            ssw += (col[s] - m) * (col[s] - m);
        }
        let df_b = (k_eff - 1) as f64;
        let df_w = (n - k_eff) as f64;
        let msb = ssb / df_b;
        let msw = ssw / df_w;
        let eps = 1e-300;
        let (score, degenerate) = if msw <= eps {
            if msb <= eps {
                (0.0, true)
            } else {
                (f64::INFINITY, true)
            }
        } else {
            (msb / msw, false)
        };
        raw.push((name.clone(), score, degenerate));
    }
    Ok(rank_scores(raw))
}

/// Supervised ranking by |Pearson r| against a continuous outcome.
pub fn correlation_ranking(x: &OmicsMatrix, y: &PhenotypeVector) -> Result<Vec<FeatureScore>> {
    if x.subject_ids != y.subject_ids {
        return Err(Error::invalid("matrix and phenotype subjects differ"));
    }
    let target = match &y.values {
        PhenotypeValues::Continuous(v) => v.clone(),
        PhenotypeValues::Categorical { .. } => {
            return Err(Error::invalid(
                "correlation_ranking needs a continuous phenotype",
            ))
        }
    };
    if stats::sample_variance(&target) <= 0.0 {
        return Err(Error::invalid("phenotype has zero variance"));
    }
    let raw = x
        .feature_names
        .iter()
        .enumerate()
        .map(|(f, name)| {
            let col = x.column(f);
            if stats::sample_variance(&col) <= 0.0 {
                (name.clone(), 0.0, true)
            } else {
                (name.clone(), stats::pearson(&col, &target).abs(), false)
            }
        })
        .collect();
    Ok(rank_scores(raw))
}

/// Mean-decrease-in-impurity importance from a seeded random forest,
/// normalized to sum to 1. Classification forests use Gini impurity,
/// regression forests variance reduction.
pub fn rf_importance(
    x: &OmicsMatrix,
    y: &PhenotypeVector,
    config: &ForestConfig,
) -> Result<Vec<FeatureScore>> {
    if x.subject_ids != y.subject_ids {
        return Err(Error::invalid("matrix and phenotype subjects differ"));
    }
    if x.n_subjects() < 10 {
        return Err(Error::invalid("rf_importance needs at least 10 subjects"));
    }
    if x.n_subjects() < config.min_leaf {
        return Err(Error::invalid("fewer subjects than minimum leaf size"));
    }
    let imp = forest::importance(x, y, config)?;
    let raw = x
        .feature_names
        .iter()
        .zip(imp)
        .map(|(n, v)| (n.clone(), v, false))
        .collect();
    Ok(rank_scores(raw))
}

/// First k feature names by rank.
pub fn top_k(scores: &[FeatureScore], k: usize) -> Result<Vec<String>> {
    if k > scores.len() {
        return Err(Error::invalid(format!(
            "k = {k} exceeds {} scored features",
            scores.len()
        )));
    }
    let mut by_rank: Vec<&FeatureScore> = scores.iter().collect();
    by_rank.sort_by_key(|s| s.rank);
    Ok(by_rank[..k]
        .iter()
        .map(|s| s.feature_name.clone())
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapReport {
    /// (name_a, name_b, |a ∩ b|) for every unordered pair, in input order.
    pub pairwise: Vec<(String, String, usize)>,
    /// Cardinality of the intersection of all sets.
    pub all: usize,
}

/// Intersection cardinalities between named selections, pairwise and joint.
pub fn selection_overlap(selections: &[(String, Vec<String>)]) -> OverlapReport {
    let sets: Vec<BTreeSet<&str>> = selections
        .iter()
        .map(|(_, v)| v.iter().map(|s| s.as_str()).collect())
        .collect();
    let mut pairwise = Vec::new();
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            pairwise.push((
                selections[i].0.clone(),
                selections[j].0.clone(),
                sets[i].intersection(&sets[j]).count(),
            ));
        }
    }
    let all = match sets.split_first() {
        None => 0,
        Some((first, rest)) => first
            .iter()
            .filter(|x| rest.iter().all(|s| s.contains(*x)))
            .count(),
    };
    OverlapReport { pairwise, all }
}

/// Scores CSV: feature,score,rank,flag.
pub fn write_scores_csv(scores: &[FeatureScore], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(["feature", "score", "rank", "flag"])?;
    let mut by_rank: Vec<&FeatureScore> = scores.iter().collect();
    by_rank.sort_by_key(|s| s.rank);
    for s in by_rank {
        w.write_record([
            s.feature_name.as_str(),
            &format_value(s.score),
            &s.rank.to_string(),
            if s.degenerate { "degenerate" } else { "" },
        ])?;
    }
    w.flush()?;
    Ok(())
}
