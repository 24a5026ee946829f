//! Declarative run configuration (TOML) with strict unknown-key rejection,
//! plus the string-to-enum parsing shared with the command-line flags.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use omicsnet::gnn::{LayerKind, Objective};
use omicsnet::ingest::{AliquotPolicy, Orientation};
use omicsnet::netbuild::{CorrMethod, KnnMode, Metric, Prune};
use omicsnet::pipeline::{Integration, Normalize, Reduction};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_format_version")]
    pub format_version: String,
    pub ingest: Option<IngestStage>,
    pub select: Option<SelectStage>,
    pub network: Option<NetworkStage>,
    pub cluster: Option<ClusterStage>,
    pub embed: Option<EmbedStage>,
    pub predict: Option<PredictStage>,
    pub represent: Option<RepresentStage>,
}

fn default_format_version() -> String {
    crate::manifest::FORMAT_VERSION.to_string()
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| CliError::config(format!("config parse: {e}")))?;
        if cfg.format_version != crate::manifest::FORMAT_VERSION {
            return Err(CliError::config(format!(
                "unsupported format_version {:?} (expected {:?})",
                cfg.format_version,
                crate::manifest::FORMAT_VERSION
            )));
        }
        if cfg.ingest.is_none()
            && cfg.select.is_none()
            && cfg.network.is_none()
            && cfg.cluster.is_none()
            && cfg.embed.is_none()
            && cfg.predict.is_none()
            && cfg.represent.is_none()
        {
            return Err(CliError::config("config contains no stages"));
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct IngestStage {
    pub omics: Vec<PathBuf>,
    /// one tag per omics file; defaults to the file stem
    pub tags: Option<Vec<String>>,
    pub phenotype: PathBuf,
    #[serde(default)]
    pub categorical: bool,
    #[serde(default = "default_orientation")]
    pub orientation: String,
    #[serde(default = "default_aliquot_policy")]
    pub aliquot_policy: String,
    /// subject-ID normalization: keep the first `id_keep` delimited segments
    /// (0 disables)
    #[serde(default)]
    pub id_keep: usize,
    #[serde(default = "default_id_delimiter")]
    pub id_delimiter: char,
}

fn default_orientation() -> String {
    "subjects-rows".into()
}
fn default_aliquot_policy() -> String {
    "average".into()
}
fn default_id_delimiter() -> char {
    '-'
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SelectStage {
    pub matrix: Option<PathBuf>,
    pub phenotype: Option<PathBuf>,
    #[serde(default)]
    pub categorical: bool,
    pub method: String,
    pub top_k: Option<usize>,
    #[serde(default = "default_trees")]
    pub trees: usize,
}

fn default_trees() -> usize {
    100
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkStage {
    pub matrix: Option<PathBuf>,
    pub method: String,
    pub threshold: Option<f64>,
    pub top_fraction: Option<f64>,
    pub k: Option<usize>,
    #[serde(default)]
    pub mutual: bool,
    #[serde(default = "default_beta_max")]
    pub beta_max: usize,
    #[serde(default = "default_target_r2")]
    pub target_r2: f64,
}

fn default_beta_max() -> usize {
    20
}
fn default_target_r2() -> f64 {
    0.8
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterStage {
    pub edges: Option<PathBuf>,
    pub nodes: Option<PathBuf>,
    #[serde(default = "default_cluster_method")]
    pub method: String,
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    /// seed node names for personalized PageRank (uniform restart mass)
    pub ppr_seeds: Option<Vec<String>>,
    #[serde(default = "default_damping")]
    pub damping: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// hybrid mode inputs
    pub matrix: Option<PathBuf>,
    pub phenotype: Option<PathBuf>,
    #[serde(default)]
    pub categorical: bool,
    #[serde(default = "default_mass_fraction")]
    pub mass_fraction: f64,
}

fn default_cluster_method() -> String {
    "louvain".into()
}
fn default_resolution() -> f64 {
    1.0
}
fn default_damping() -> f64 {
    0.85
}
fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    10_000
}
fn default_mass_fraction() -> f64 {
    0.5
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedStage {
    pub edges: Option<PathBuf>,
    pub nodes: Option<PathBuf>,
    pub matrix: Option<PathBuf>,
    pub phenotype: Option<PathBuf>,
    #[serde(default)]
    pub categorical: bool,
    #[serde(default = "default_kind")]
    pub kind: String,
    #[serde(default = "default_layers")]
    pub layers: usize,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_objective")]
    pub objective: String,
    #[serde(default = "default_negatives")]
    pub negatives_per_edge: usize,
    #[serde(default = "default_heads")]
    pub heads: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub learnable_epsilon: bool,
}

fn default_kind() -> String {
    "gcn".into()
}
fn default_layers() -> usize {
    2
}
fn default_hidden() -> usize {
    64
}
fn default_dim() -> usize {
    32
}
fn default_lr() -> f64 {
    0.01
}
fn default_epochs() -> usize {
    200
}
fn default_objective() -> String {
    "regression".into()
}
fn default_negatives() -> usize {
    1
}
fn default_heads() -> usize {
    2
}
fn default_epsilon() -> f64 {
    0.0
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PredictStage {
    pub matrix: Option<PathBuf>,
    pub phenotype: Option<PathBuf>,
    pub edges: Option<PathBuf>,
    pub nodes: Option<PathBuf>,
    #[serde(default = "default_kind")]
    pub kind: String,
    #[serde(default = "default_layers")]
    pub gnn_layers: usize,
    #[serde(default = "default_hidden")]
    pub gnn_hidden: usize,
    #[serde(default = "default_dim")]
    pub embedding_dim: usize,
    #[serde(default = "default_reduction")]
    pub reduction: String,
    #[serde(default = "default_integration")]
    pub integration: String,
    #[serde(default = "default_classifier_hidden")]
    pub classifier_hidden: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_split")]
    pub split: [f64; 3],
    #[serde(default = "default_n_seeds")]
    pub n_seeds: usize,
    #[serde(default = "default_heads")]
    pub heads: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_reduction() -> String {
    "mean".into()
}
fn default_integration() -> String {
    "feature-weight".into()
}
fn default_classifier_hidden() -> usize {
    128
}
fn default_momentum() -> f64 {
    0.9
}
fn default_split() -> [f64; 3] {
    [0.7, 0.15, 0.15]
}
fn default_n_seeds() -> usize {
    10
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentStage {
    pub matrix: Option<PathBuf>,
    pub embedding: Option<PathBuf>,
    #[serde(default = "default_normalize")]
    pub normalize: String,
}

fn default_normalize() -> String {
    "none".into()
}

// ---------------------------------------------------------------------------
// shared string -> enum parsing

pub fn parse_orientation(s: &str) -> Result<Orientation> {
    match s {
        "subjects-rows" => Ok(Orientation::SubjectsAsRows),
        "features-rows" => Ok(Orientation::FeaturesAsRows),
        other => Err(CliError::config(format!(
            "unknown orientation {other:?} (subjects-rows | features-rows)"
        ))),
    }
}

pub fn parse_aliquot_policy(s: &str) -> Result<AliquotPolicy> {
    match s {
        "average" => Ok(AliquotPolicy::Average),
        "error" => Ok(AliquotPolicy::Error),
        other => Err(CliError::config(format!(
            "unknown aliquot policy {other:?} (average | error)"
        ))),
    }
}

pub fn parse_layer_kind(
    s: &str,
    heads: usize,
    epsilon: f64,
    learnable_epsilon: bool,
) -> Result<LayerKind> {
    match s {
        "gcn" => Ok(LayerKind::Gcn),
        "gat" => Ok(LayerKind::Gat {
            num_heads: heads,
            leaky_slope: 0.2,
        }),
        "sage" => Ok(LayerKind::Sage),
        "gin" => Ok(LayerKind::Gin {
            epsilon,
            learnable: learnable_epsilon,
        }),
        other => Err(CliError::config(format!(
            "unknown layer kind {other:?} (gcn | gat | sage | gin)"
        ))),
    }
}

pub fn parse_objective(s: &str, negatives_per_edge: usize) -> Result<Objective> {
    match s {
        "regression" => Ok(Objective::PhenotypeRegression),
        "reconstruction" => Ok(Objective::AdjacencyReconstruction { negatives_per_edge }),
        other => Err(CliError::config(format!(
            "unknown objective {other:?} (regression | reconstruction)"
        ))),
    }
}

pub fn parse_reduction(s: &str) -> Result<Reduction> {
    match s {
        "mean" => Ok(Reduction::Mean),
        "max" => Ok(Reduction::Max),
        "autoencoder" => Ok(Reduction::Autoencoder),
        other => Err(CliError::config(format!(
            "unknown reduction {other:?} (mean | max | autoencoder)"
        ))),
    }
}

pub fn parse_integration(s: &str) -> Result<Integration> {
    match s {
        "feature-weight" => Ok(Integration::FeatureWeight),
        "concatenate" => Ok(Integration::Concatenate),
        other => Err(CliError::config(format!(
            "unknown integration {other:?} (feature-weight | concatenate)"
        ))),
    }
}

pub fn parse_normalize(s: &str) -> Result<Normalize> {
    match s {
        "none" => Ok(Normalize::None),
        "row-unit" => Ok(Normalize::RowUnit),
        other => Err(CliError::config(format!(
            "unknown normalization {other:?} (none | row-unit)"
        ))),
    }
}

pub enum NetworkMethod {
    Correlation(CorrMethod),
    Similarity(Metric),
    SoftThreshold,
    Knn(KnnMode),
    Snn,
}

pub fn parse_network_method(s: &str, mutual: bool) -> Result<NetworkMethod> {
    match s {
        "pearson" => Ok(NetworkMethod::Correlation(CorrMethod::Pearson)),
        "spearman" => Ok(NetworkMethod::Correlation(CorrMethod::Spearman)),
        "cosine" => Ok(NetworkMethod::Similarity(Metric::Cosine)),
        "euclidean" => Ok(NetworkMethod::Similarity(Metric::Euclidean)),
        "soft-threshold" => Ok(NetworkMethod::SoftThreshold),
        "knn" => Ok(NetworkMethod::Knn(if mutual { KnnMode::Mutual } else { KnnMode::Union })),
        "snn" => Ok(NetworkMethod::Snn),
        other => Err(CliError::config(format!(
            "unknown network method {other:?} (pearson | spearman | cosine | euclidean | soft-threshold | knn | snn)"
        ))),
    }
}

pub fn parse_prune(threshold: Option<f64>, top_fraction: Option<f64>) -> Result<Prune> {
    match (threshold, top_fraction) {
        (Some(_), Some(_)) => Err(CliError::config(
            "set at most one of threshold / top_fraction",
        )),
        (Some(t), None) => Ok(Prune::Threshold(t)),
        (None, Some(f)) => Ok(Prune::TopFraction(f)),
        (None, None) => Ok(Prune::None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        let toml = r#"
            output_dir = "out"
            [network]
            method = "pearson"
            typo_key = 1
        "#;
        let err = RunConfig::from_toml(toml).unwrap_err();
        assert!(err.to_string().contains("typo_key"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn minimal_network_config_parses() {
        let toml = r#"
            output_dir = "out"
            seed = 7
            [network]
            matrix = "x.csv"
            method = "pearson"
            threshold = 0.3
        "#;
        let cfg = RunConfig::from_toml(toml).unwrap();
        assert_eq!(cfg.seed, 7);
        let net = cfg.network.unwrap();
        assert_eq!(net.method, "pearson");
        assert_eq!(net.threshold, Some(0.3));
        assert_eq!(net.beta_max, 20);
    }

    #[test]
    fn empty_config_rejected() {
        let err = RunConfig::from_toml("output_dir = \"out\"").unwrap_err();
        assert!(err.to_string().contains("no stages"));
    }

    #[test]
    fn bad_format_version_rejected() {
        let toml = r#"
            output_dir = "out"
            format_version = "99"
            [network]
            method = "pearson"
        "#;
        assert!(RunConfig::from_toml(toml).is_err());
    }

    #[test]
    fn enum_parsers_cover_all_values() {
        assert!(parse_layer_kind("gat", 4, 0.0, false).is_ok());
        assert!(parse_layer_kind("mlp", 1, 0.0, false).is_err());
        assert!(parse_network_method("snn", false).is_ok());
        assert!(parse_network_method("tsne", false).is_err());
        assert!(parse_prune(Some(0.1), Some(0.2)).is_err());
        assert!(parse_reduction("autoencoder").is_ok());
        assert!(parse_integration("concatenate").is_ok());
        assert!(parse_normalize("row-unit").is_ok());
        assert!(parse_objective("reconstruction", 2).is_ok());
        assert!(parse_orientation("features-rows").is_ok());
        assert!(parse_aliquot_policy("error").is_ok());
    }
}
