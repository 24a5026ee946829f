//! `omicsnet`: multi-omics feature networks, community detection, GNN
//! embeddings, and network-integrated phenotype prediction from the command
//! line. Stages run one at a time via subcommands or together from a single
//! TOML run configuration.

mod config;
mod error;
mod manifest;
mod ops;
mod pca;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::*;
use error::{CliError, Result};

#[derive(Parser)]
#[command(
    name = "omicsnet",
    version,
    about = "Multi-omics network analysis toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load omics CSVs, normalize subject IDs, and align a cohort
    Ingest(IngestArgs),
    /// Rank features (variance, ANOVA F, correlation, forest importance)
    Select(SelectArgs),
    /// Build a feature association network from an omics matrix
    BuildNet(BuildNetArgs),
    /// Community detection and personalized PageRank on a network
    Cluster(ClusterArgs),
    /// Train a GNN node embedder on a feature network
    Embed(EmbedArgs),
    /// Network-integrated phenotype prediction (embed, reduce, integrate, classify)
    Predict(PredictArgs),
    /// Project subjects through feature embeddings (X . E)
    Represent(RepresentArgs),
    /// Export 2-D PCA coordinates of an embedding for plotting
    ExportCoords(ExportCoordsArgs),
    /// Execute a declarative multi-stage TOML run configuration
    Run(RunArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Omics CSV files (repeatable)
    #[arg(long = "omics", required = true, num_args = 1..)]
    omics: Vec<PathBuf>,
    /// Modality tag per omics file (defaults to file stems)
    #[arg(long = "tag")]
    tags: Vec<String>,
    #[arg(long)]
    phenotype: PathBuf,
    /// Treat the phenotype as categorical class labels
    #[arg(long)]
    categorical: bool,
    /// subjects-rows | features-rows
    #[arg(long, default_value = "subjects-rows")]
    orientation: String,
    /// average | error
    #[arg(long, default_value = "average")]
    aliquot_policy: String,
    /// Keep the first N delimited ID segments (0 = no normalization)
    #[arg(long, default_value_t = 0)]
    id_keep: usize,
    #[arg(long, default_value_t = '-')]
    id_delimiter: char,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    phenotype: Option<PathBuf>,
    #[arg(long)]
    categorical: bool,
    /// variance | anova | correlation | rf
    #[arg(long)]
    method: String,
    /// Also write the top-k feature list and filtered matrix
    #[arg(long)]
    top_k: Option<usize>,
    /// Forest size for method rf
    #[arg(long, default_value_t = 100)]
    trees: usize,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BuildNetArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// pearson | spearman | cosine | euclidean | soft-threshold | knn | snn
    #[arg(long)]
    method: String,
    /// Drop edges below this weight
    #[arg(long)]
    threshold: Option<f64>,
    /// Keep only this top fraction of edges by weight
    #[arg(long)]
    top_fraction: Option<f64>,
    /// Neighbor count for knn / snn
    #[arg(long)]
    k: Option<usize>,
    /// Mutual (AND) instead of union (OR) kNN symmetrization
    #[arg(long)]
    mutual: bool,
    /// Largest beta tried for soft thresholding
    #[arg(long, default_value_t = 20)]
    beta_max: usize,
    /// Scale-free fit target R^2
    #[arg(long, default_value_t = 0.8)]
    target_r2: f64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    edges: PathBuf,
    /// Node-order file capturing isolated nodes (optional)
    #[arg(long)]
    nodes: Option<PathBuf>,
    /// louvain | ppr | hybrid
    #[arg(long, default_value = "louvain")]
    method: String,
    #[arg(long, default_value_t = 1.0)]
    resolution: f64,
    /// Seed node names for ppr (repeatable)
    #[arg(long = "ppr-seed")]
    ppr_seeds: Vec<String>,
    #[arg(long, default_value_t = 0.85)]
    damping: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 10000)]
    max_iter: usize,
    /// Omics matrix (hybrid only)
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Phenotype CSV (hybrid only)
    #[arg(long)]
    phenotype: Option<PathBuf>,
    #[arg(long)]
    categorical: bool,
    /// PPR mass retained by the hybrid cut
    #[arg(long, default_value_t = 0.5)]
    mass_fraction: f64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    edges: PathBuf,
    #[arg(long)]
    nodes: Option<PathBuf>,
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    phenotype: PathBuf,
    #[arg(long)]
    categorical: bool,
    /// gcn | gat | sage | gin
    #[arg(long, default_value = "gcn")]
    kind: String,
    #[arg(long, default_value_t = 2)]
    layers: usize,
    #[arg(long, default_value_t = 64)]
    hidden: usize,
    /// Embedding dimension
    #[arg(long, default_value_t = 32)]
    dim: usize,
    #[arg(long, default_value_t = 0.01)]
    learning_rate: f64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    /// regression | reconstruction
    #[arg(long, default_value = "regression")]
    objective: String,
    #[arg(long, default_value_t = 1)]
    negatives_per_edge: usize,
    /// Attention heads for gat
    #[arg(long, default_value_t = 2)]
    heads: usize,
    /// Self-loop weight offset for gin
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[arg(long)]
    learnable_epsilon: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Categorical phenotype CSV
    #[arg(long)]
    phenotype: PathBuf,
    #[arg(long)]
    edges: PathBuf,
    #[arg(long)]
    nodes: Option<PathBuf>,
    /// gcn | gat | sage | gin
    #[arg(long, default_value = "gcn")]
    kind: String,
    #[arg(long, default_value_t = 2)]
    gnn_layers: usize,
    #[arg(long, default_value_t = 64)]
    gnn_hidden: usize,
    #[arg(long, default_value_t = 32)]
    embedding_dim: usize,
    /// mean | max | autoencoder
    #[arg(long, default_value = "mean")]
    reduction: String,
    /// feature-weight | concatenate
    #[arg(long, default_value = "feature-weight")]
    integration: String,
    #[arg(long, default_value_t = 128)]
    classifier_hidden: usize,
    #[arg(long, default_value_t = 0.01)]
    learning_rate: f64,
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    /// Train/validation/test fractions
    #[arg(long, num_args = 3, default_values_t = [0.7, 0.15, 0.15])]
    split: Vec<f64>,
    /// Number of independent training seeds to aggregate
    #[arg(long, default_value_t = 10)]
    n_seeds: usize,
    #[arg(long, default_value_t = 2)]
    heads: usize,
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RepresentArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    embedding: PathBuf,
    /// none | row-unit
    #[arg(long, default_value = "none")]
    normalize: String,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ExportCoordsArgs {
    #[arg(long)]
    embedding: PathBuf,
    #[arg(long, default_value = "coords.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration
    #[arg(long)]
    config: PathBuf,
}

fn real_main() -> Result<()> {
    match Cli::parse().command {
        Command::Ingest(a) => {
            let stage = IngestStage {
                omics: a.omics,
                tags: if a.tags.is_empty() {
                    None
                } else {
                    Some(a.tags)
                },
                phenotype: a.phenotype,
                categorical: a.categorical,
                orientation: a.orientation,
                aliquot_policy: a.aliquot_policy,
                id_keep: a.id_keep,
                id_delimiter: a.id_delimiter,
            };
            ops::exec_ingest(&stage, &a.out_dir, a.seed)?;
        }
        Command::Select(a) => {
            let stage = SelectStage {
                matrix: Some(a.matrix.clone()),
                phenotype: a.phenotype.clone(),
                categorical: a.categorical,
                method: a.method,
                top_k: a.top_k,
                trees: a.trees,
            };
            let phen = a.phenotype.as_ref().map(|p| (p.as_path(), a.categorical));
            ops::exec_select(&stage, &a.matrix, phen, &a.out_dir, a.seed)?;
        }
        Command::BuildNet(a) => {
            let stage = NetworkStage {
                matrix: Some(a.matrix.clone()),
                method: a.method,
                threshold: a.threshold,
                top_fraction: a.top_fraction,
                k: a.k,
                mutual: a.mutual,
                beta_max: a.beta_max,
                target_r2: a.target_r2,
            };
            ops::exec_network(&stage, &a.matrix, &a.out_dir, a.seed)?;
        }
        Command::Cluster(a) => {
            let stage = ClusterStage {
                edges: Some(a.edges.clone()),
                nodes: a.nodes.clone(),
                method: a.method,
                resolution: a.resolution,
                ppr_seeds: if a.ppr_seeds.is_empty() {
                    None
                } else {
                    Some(a.ppr_seeds)
                },
                damping: a.damping,
                tol: a.tol,
                max_iter: a.max_iter,
                matrix: a.matrix,
                phenotype: a.phenotype,
                categorical: a.categorical,
                mass_fraction: a.mass_fraction,
            };
            ops::exec_cluster(&stage, &a.edges, a.nodes.as_deref(), &a.out_dir, a.seed)?;
        }
        Command::Embed(a) => {
            let stage = EmbedStage {
                edges: Some(a.edges.clone()),
                nodes: a.nodes.clone(),
                matrix: Some(a.matrix.clone()),
                phenotype: Some(a.phenotype.clone()),
                categorical: a.categorical,
                kind: a.kind,
                layers: a.layers,
                hidden: a.hidden,
                dim: a.dim,
                learning_rate: a.learning_rate,
                epochs: a.epochs,
                objective: a.objective,
                negatives_per_edge: a.negatives_per_edge,
                heads: a.heads,
                epsilon: a.epsilon,
                learnable_epsilon: a.learnable_epsilon,
            };
            ops::exec_embed(
                &stage,
                &a.edges,
                a.nodes.as_deref(),
                &a.matrix,
                (&a.phenotype, a.categorical),
                &a.out_dir,
                a.seed,
            )?;
        }
        Command::Predict(a) => {
            let split: [f64; 3] = a
                .split
                .clone()
                .try_into()
                .map_err(|_| CliError::config("--split takes exactly three fractions"))?;
            let stage = PredictStage {
                matrix: Some(a.matrix.clone()),
                phenotype: Some(a.phenotype.clone()),
                edges: Some(a.edges.clone()),
                nodes: a.nodes.clone(),
                kind: a.kind,
                gnn_layers: a.gnn_layers,
                gnn_hidden: a.gnn_hidden,
                embedding_dim: a.embedding_dim,
                reduction: a.reduction,
                integration: a.integration,
                classifier_hidden: a.classifier_hidden,
                learning_rate: a.learning_rate,
                momentum: a.momentum,
                epochs: a.epochs,
                split,
                n_seeds: a.n_seeds,
                heads: a.heads,
                epsilon: a.epsilon,
            };
            ops::exec_predict(
                &stage,
                &a.matrix,
                &a.phenotype,
                &a.edges,
                a.nodes.as_deref(),
                &a.out_dir,
                a.seed,
            )?;
        }
        Command::Represent(a) => {
            let stage = RepresentStage {
                matrix: Some(a.matrix.clone()),
                embedding: Some(a.embedding.clone()),
                normalize: a.normalize,
            };
            ops::exec_represent(&stage, &a.matrix, &a.embedding, &a.out_dir, a.seed)?;
        }
        Command::ExportCoords(a) => ops::exec_export_coords(&a.embedding, &a.out)?,
        Command::Run(a) => {
            let text = std::fs::read_to_string(&a.config).map_err(|e| {
                CliError::config(format!("cannot read {}: {e}", a.config.display()))
            })?;
            let cfg = RunConfig::from_toml(&text)?;
            ops::exec_run(&cfg)?;
        }
    }
    Ok(())
}

fn main() {
    match real_main() {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
