//! Stage executors shared by the one-shot subcommands and the declarative
//! `run` command. Every stage writes its artifacts plus a manifest into the
//! output directory and returns the paths downstream stages consume.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use omicsnet::community::{
    hybrid_ppr_louvain, louvain, personalized_pagerank, write_partition_csv, write_ppr_csv,
};
use omicsnet::error::Error;
use omicsnet::featselect::{
    anova_f_scores, correlation_ranking, rf_importance, top_k, variance_scores, write_scores_csv,
    ForestConfig,
};
use omicsnet::gnn::{
    read_embedding_csv, train_embedder, write_embedding_csv, EmbeddingMatrix, TrainConfig,
};
use omicsnet::ingest::{
    align_cohort, concat_modalities, format_value, load_omics_csv, load_phenotype_csv,
    normalize_id, write_omics_csv, write_phenotype_csv, OmicsMatrix, PhenotypeVector,
};
use omicsnet::netbuild::{
    correlation_network, import_network, knn_graph, read_node_order, similarity_network, snn_graph,
    soft_threshold_network, write_edge_list, write_node_order, FeatureGraph,
};
use omicsnet::pipeline::{
    predict_phenotype, report_summary, subject_representation, write_report_csv, PredictionConfig,
};

use crate::config::*;
use crate::error::{CliError, Result};
use crate::manifest::Manifest;
use crate::pca::pca_coords;

fn to_json<T: serde::Serialize>(cfg: &T) -> serde_json::Value {
    serde_json::to_value(cfg).unwrap_or(serde_json::Value::Null)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

pub fn load_graph(edges: &Path, nodes: Option<&Path>) -> Result<FeatureGraph> {
    let order = match nodes {
        Some(p) => Some(read_node_order(p)?),
        None => None,
    };
    Ok(import_network(edges, order.as_deref())?)
}

fn load_matrix(path: &Path) -> Result<OmicsMatrix> {
    Ok(load_omics_csv(
        path,
        "matrix",
        omicsnet::ingest::Orientation::SubjectsAsRows,
    )?)
}

fn check_same_subjects(x: &OmicsMatrix, y: &PhenotypeVector) -> Result<()> {
    if x.subject_ids != y.subject_ids {
        return Err(CliError::Core(Error::invalid(
            "matrix and phenotype list different subjects; run ingest to align them",
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// ingest

pub struct IngestOutputs {
    pub matrix: PathBuf,
    pub phenotype: PathBuf,
    pub categorical: bool,
}

pub fn exec_ingest(cfg: &IngestStage, out_dir: &Path, seed: u64) -> Result<IngestOutputs> {
    ensure_dir(out_dir)?;
    if cfg.omics.is_empty() {
        return Err(CliError::config("ingest needs at least one omics file"));
    }
    let tags: Vec<String> = match &cfg.tags {
        Some(t) => {
            if t.len() != cfg.omics.len() {
                return Err(CliError::config("tags count must match omics count"));
            }
            t.clone()
        }
        None => cfg
            .omics
            .iter()
            .map(|p| {
                p.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "omics".into())
            })
            .collect(),
    };
    let orientation = parse_orientation(&cfg.orientation)?;
    let policy = parse_aliquot_policy(&cfg.aliquot_policy)?;

    let mut matrices = Vec::new();
    for (path, tag) in cfg.omics.iter().zip(&tags) {
        let mut m = load_omics_csv(path, tag, orientation)?;
        if cfg.id_keep > 0 {
            for id in &mut m.subject_ids {
                *id = normalize_id(id, cfg.id_delimiter, cfg.id_keep);
            }
        }
        matrices.push(m);
    }
    let mut phenotype = load_phenotype_csv(&cfg.phenotype, cfg.categorical)?;
    if cfg.id_keep > 0 {
        for id in &mut phenotype.subject_ids {
            *id = normalize_id(id, cfg.id_delimiter, cfg.id_keep);
        }
    }
    let aligned = align_cohort(&matrices, &phenotype, policy)?;

    let mut manifest = Manifest::new("ingest", seed, to_json(cfg));
    for (path, tag) in cfg.omics.iter().zip(&tags) {
        manifest.add_input(&format!("omics:{tag}"), path)?;
    }
    manifest.add_input("phenotype", &cfg.phenotype)?;

    for m in &aligned.modalities {
        let p = out_dir.join(format!("aligned_{}.csv", m.modality));
        write_omics_csv(m, &p)?;
        manifest.add_output(&format!("aligned_{}.csv", m.modality), &p)?;
    }
    let phenotype_path = out_dir.join("phenotype.csv");
    write_phenotype_csv(&aligned.phenotype, &phenotype_path)?;
    manifest.add_output("phenotype.csv", &phenotype_path)?;

    let combined = if aligned.modalities.len() == 1 {
        aligned.modalities[0].clone()
    } else {
        concat_modalities(&aligned, &tags)?
    };
    let matrix_path = out_dir.join("matrix.csv");
    write_omics_csv(&combined, &matrix_path)?;
    manifest.add_output("matrix.csv", &matrix_path)?;

    let provenance_path = out_dir.join("provenance.txt");
    std::fs::write(&provenance_path, aligned.provenance.report())?;
    manifest.add_output("provenance.txt", &provenance_path)?;
    manifest.write(out_dir)?;

    Ok(IngestOutputs {
        matrix: matrix_path,
        phenotype: phenotype_path,
        categorical: cfg.categorical,
    })
}

// ---------------------------------------------------------------------------
// select

pub struct SelectOutputs {
    /// the matrix downstream stages should use (filtered when top_k is set)
    pub matrix: PathBuf,
}

pub fn exec_select(
    cfg: &SelectStage,
    matrix: &Path,
    phenotype: Option<(&Path, bool)>,
    out_dir: &Path,
    seed: u64,
) -> Result<SelectOutputs> {
    ensure_dir(out_dir)?;
    let x = load_matrix(matrix)?;
    let mut manifest = Manifest::new("select", seed, to_json(cfg));
    manifest.add_input("matrix", matrix)?;

    let load_y = |required_by: &str| -> Result<PhenotypeVector> {
        let (path, categorical) = phenotype.ok_or_else(|| {
            CliError::config(format!("select method {required_by:?} needs a phenotype"))
        })?;
        let y = load_phenotype_csv(path, categorical)?;
        check_same_subjects(&x, &y)?;
        Ok(y)
    };
    let scores = match cfg.method.as_str() {
        "variance" => variance_scores(&x)?,
        "anova" => anova_f_scores(&x, &load_y("anova")?)?,
        "correlation" => correlation_ranking(&x, &load_y("correlation")?)?,
        "rf" => rf_importance(
            &x,
            &load_y("rf")?,
            &ForestConfig {
                n_trees: cfg.trees,
                seed,
                ..ForestConfig::default()
            },
        )?,
        other => {
            return Err(CliError::config(format!(
                "unknown selection method {other:?} (variance | anova | correlation | rf)"
            )))
        }
    };
    if let Some((path, _)) = phenotype {
        manifest.add_input("phenotype", path)?;
    }

    let scores_path = out_dir.join("scores.csv");
    write_scores_csv(&scores, &scores_path)?;
    manifest.add_output("scores.csv", &scores_path)?;

    let mut out_matrix = matrix.to_path_buf();
    if let Some(k) = cfg.top_k {
        let names = top_k(&scores, k)?;
        let list_path = out_dir.join("selected.txt");
        std::fs::write(&list_path, names.join("\n") + "\n")?;
        manifest.add_output("selected.txt", &list_path)?;
        let filtered = x.select_features(&names)?;
        let filtered_path = out_dir.join("matrix_selected.csv");
        write_omics_csv(&filtered, &filtered_path)?;
        manifest.add_output("matrix_selected.csv", &filtered_path)?;
        out_matrix = filtered_path;
    }
    manifest.write(out_dir)?;
    Ok(SelectOutputs { matrix: out_matrix })
}

// ---------------------------------------------------------------------------
// network

pub struct NetworkOutputs {
    pub edges: PathBuf,
    pub nodes: PathBuf,
}

pub fn exec_network(
    cfg: &NetworkStage,
    matrix: &Path,
    out_dir: &Path,
    seed: u64,
) -> Result<NetworkOutputs> {
    ensure_dir(out_dir)?;
    let x = load_matrix(matrix)?;
    let prune = parse_prune(cfg.threshold, cfg.top_fraction)?;
    let method = parse_network_method(&cfg.method, cfg.mutual)?;
    let mut manifest = Manifest::new("network", seed, to_json(cfg));
    manifest.add_input("matrix", matrix)?;

    let need_k = || {
        cfg.k
            .ok_or_else(|| CliError::config(format!("network method {:?} needs k", cfg.method)))
    };
    let (graph, fit) = match method {
        NetworkMethod::Correlation(m) => (correlation_network(&x, m, prune)?, None),
        NetworkMethod::Similarity(m) => (similarity_network(&x, m, prune)?, None),
        NetworkMethod::SoftThreshold => {
            let grid: Vec<f64> = (1..=cfg.beta_max).map(|b| b as f64).collect();
            let (g, fit) = soft_threshold_network(&x, &grid, cfg.target_r2)?;
            (g, Some(fit))
        }
        NetworkMethod::Knn(mode) => (
            knn_graph(&x, need_k()?, omicsnet::netbuild::Metric::Cosine, mode)?,
            None,
        ),
        NetworkMethod::Snn => (snn_graph(&x, need_k()?)?, None),
    };

    let edges_path = out_dir.join("edges.csv");
    write_edge_list(&graph, &edges_path)?;
    manifest.add_output("edges.csv", &edges_path)?;
    let nodes_path = out_dir.join("nodes.txt");
    write_node_order(&graph, &nodes_path)?;
    manifest.add_output("nodes.txt", &nodes_path)?;

    if let Some(fit) = fit {
        let fit_path = out_dir.join("scale_free_fit.csv");
        let mut w = csv::Writer::from_path(&fit_path).map_err(|e| CliError::Core(Error::Csv(e)))?;
        w.write_record(["beta", "r2", "chosen"])
            .map_err(|e| CliError::Core(Error::Csv(e)))?;
        for (beta, r2) in &fit.per_beta {
            w.write_record([
                format_value(*beta),
                r2.map(format_value).unwrap_or_default(),
                (*beta == fit.chosen_beta).to_string(),
            ])
            .map_err(|e| CliError::Core(Error::Csv(e)))?;
        }
        w.flush()?;
        manifest.add_output("scale_free_fit.csv", &fit_path)?;
        if fit.below_target {
            eprintln!(
                "warning: no beta reached scale-free R^2 {}; using beta {} (R^2 {:.4})",
                cfg.target_r2, fit.chosen_beta, fit.chosen_r2
            );
        }
    }
    manifest.write(out_dir)?;
    Ok(NetworkOutputs {
        edges: edges_path,
        nodes: nodes_path,
    })
}

// ---------------------------------------------------------------------------
// cluster

pub fn exec_cluster(
    cfg: &ClusterStage,
    edges: &Path,
    nodes: Option<&Path>,
    out_dir: &Path,
    seed: u64,
) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let g = load_graph(edges, nodes)?;
    let mut manifest = Manifest::new("cluster", seed, to_json(cfg));
    manifest.add_input("edges", edges)?;
    if let Some(n) = nodes {
        manifest.add_input("nodes", n)?;
    }
    let mut outputs = Vec::new();
    match cfg.method.as_str() {
        "louvain" => {
            let p = louvain(&g, seed, cfg.resolution)?;
            let path = out_dir.join("partition.csv");
            write_partition_csv(&g, &p, &path)?;
            manifest.add_output("partition.csv", &path)?;
            println!(
                "louvain: {} communities, modularity {:.6}",
                p.n_communities(),
                p.modularity
            );
            outputs.push(path);
        }
        "ppr" => {
            let names = cfg
                .ppr_seeds
                .as_ref()
                .filter(|s| !s.is_empty())
                .ok_or_else(|| CliError::config("ppr needs ppr_seeds (node names)"))?;
            let mass = 1.0 / names.len() as f64;
            let mut seeds_idx = Vec::new();
            for name in names {
                let i = g.node_names.iter().position(|n| n == name).ok_or_else(|| {
                    CliError::Core(Error::invalid(format!("unknown seed node {name:?}")))
                })?;
                seeds_idx.push((i, mass));
            }
            let v = personalized_pagerank(&g, &seeds_idx, cfg.damping, cfg.tol, cfg.max_iter)?;
            let path = out_dir.join("ppr.csv");
            write_ppr_csv(&g, &v, &path)?;
            manifest.add_output("ppr.csv", &path)?;
            outputs.push(path);
        }
        "hybrid" => {
            let matrix = cfg
                .matrix
                .as_ref()
                .ok_or_else(|| CliError::config("hybrid clustering needs a matrix"))?;
            let phen = cfg
                .phenotype
                .as_ref()
                .ok_or_else(|| CliError::config("hybrid clustering needs a phenotype"))?;
            let x = load_matrix(matrix)?;
            let y = load_phenotype_csv(phen, cfg.categorical)?;
            check_same_subjects(&x, &y)?;
            manifest.add_input("matrix", matrix)?;
            manifest.add_input("phenotype", phen)?;
            let h = hybrid_ppr_louvain(&g, &x, &y, cfg.mass_fraction, seed)?;
            let ppr_path = out_dir.join("ppr.csv");
            write_ppr_csv(&g, &h.ppr, &ppr_path)?;
            manifest.add_output("ppr.csv", &ppr_path)?;
            let retained_path = out_dir.join("retained.txt");
            let mut f = std::fs::File::create(&retained_path)?;
            for &i in &h.retained {
                writeln!(f, "{}", g.node_names[i])?;
            }
            manifest.add_output("retained.txt", &retained_path)?;
            let part_path = out_dir.join("partition.csv");
            write_partition_csv(&h.subgraph, &h.partition, &part_path)?;
            manifest.add_output("partition.csv", &part_path)?;
            println!(
                "hybrid: retained {} nodes ({:.4} mass), {} communities",
                h.retained.len(),
                h.retained_mass,
                h.partition.n_communities()
            );
            outputs.extend([ppr_path, retained_path, part_path]);
        }
        other => {
            return Err(CliError::config(format!(
                "unknown cluster method {other:?} (louvain | ppr | hybrid)"
            )))
        }
    }
    manifest.write(out_dir)?;
    Ok(outputs)
}

// ---------------------------------------------------------------------------
// embed

pub fn exec_embed(
    cfg: &EmbedStage,
    edges: &Path,
    nodes: Option<&Path>,
    matrix: &Path,
    phenotype: (&Path, bool),
    out_dir: &Path,
    seed: u64,
) -> Result<PathBuf> {
    ensure_dir(out_dir)?;
    let g = load_graph(edges, nodes)?;
    let x = load_matrix(matrix)?;
    let y = load_phenotype_csv(phenotype.0, phenotype.1)?;
    check_same_subjects(&x, &y)?;
    let train = TrainConfig {
        kind: parse_layer_kind(&cfg.kind, cfg.heads, cfg.epsilon, cfg.learnable_epsilon)?,
        n_layers: cfg.layers,
        hidden_dim: cfg.hidden,
        embedding_dim: cfg.dim,
        learning_rate: cfg.learning_rate,
        momentum: 0.0,
        epochs: cfg.epochs,
        objective: parse_objective(&cfg.objective, cfg.negatives_per_edge)?,
        seed,
    };
    let e = train_embedder(&g, &x, &y, &train)?;

    let mut manifest = Manifest::new("embed", seed, to_json(cfg));
    manifest.add_input("edges", edges)?;
    manifest.add_input("matrix", matrix)?;
    manifest.add_input("phenotype", phenotype.0)?;
    let emb_path = out_dir.join("embedding.csv");
    write_embedding_csv(&e, &emb_path)?;
    manifest.add_output("embedding.csv", &emb_path)?;
    if let Some(meta) = &e.meta {
        let loss_path = out_dir.join("loss.csv");
        let mut w =
            csv::Writer::from_path(&loss_path).map_err(|e| CliError::Core(Error::Csv(e)))?;
        w.write_record(["epoch", "loss"])
            .map_err(|e| CliError::Core(Error::Csv(e)))?;
        for (i, l) in meta.loss_curve.iter().enumerate() {
            w.write_record([i.to_string(), format_value(*l)])
                .map_err(|e| CliError::Core(Error::Csv(e)))?;
        }
        w.flush()?;
        manifest.add_output("loss.csv", &loss_path)?;
    }
    manifest.write(out_dir)?;
    Ok(emb_path)
}

// ---------------------------------------------------------------------------
// predict

pub fn exec_predict(
    cfg: &PredictStage,
    matrix: &Path,
    phenotype: &Path,
    edges: &Path,
    nodes: Option<&Path>,
    out_dir: &Path,
    seed: u64,
) -> Result<PathBuf> {
    ensure_dir(out_dir)?;
    let x = load_matrix(matrix)?;
    let y = load_phenotype_csv(phenotype, true)?;
    let dataset = align_cohort(
        std::slice::from_ref(&x),
        &y,
        omicsnet::ingest::AliquotPolicy::Average,
    )?;
    let g = load_graph(edges, nodes)?;
    let pred_cfg = PredictionConfig {
        kind: parse_layer_kind(&cfg.kind, cfg.heads, cfg.epsilon, false)?,
        gnn_layers: cfg.gnn_layers,
        gnn_hidden: cfg.gnn_hidden,
        embedding_dim: cfg.embedding_dim,
        reduction: parse_reduction(&cfg.reduction)?,
        integration: parse_integration(&cfg.integration)?,
        classifier_hidden: cfg.classifier_hidden,
        learning_rate: cfg.learning_rate,
        momentum: cfg.momentum,
        epochs: cfg.epochs,
        split: cfg.split,
        seeds: (0..cfg.n_seeds as u64)
            .map(|i| seed.wrapping_add(i))
            .collect(),
    };
    let report = predict_phenotype(&dataset, &g, &pred_cfg)?;

    let mut manifest = Manifest::new("predict", seed, to_json(cfg));
    manifest.add_input("matrix", matrix)?;
    manifest.add_input("phenotype", phenotype)?;
    manifest.add_input("edges", edges)?;
    let report_path = out_dir.join("prediction.csv");
    write_report_csv(&report, &report_path)?;
    manifest.add_output("prediction.csv", &report_path)?;
    let summary_path = out_dir.join("summary.txt");
    std::fs::write(&summary_path, report_summary(&report))?;
    manifest.add_output("summary.txt", &summary_path)?;
    manifest.write(out_dir)?;
    print!("{}", report_summary(&report));
    Ok(report_path)
}

// ---------------------------------------------------------------------------
// represent / export-coords

pub fn exec_represent(
    cfg: &RepresentStage,
    matrix: &Path,
    embedding: &Path,
    out_dir: &Path,
    seed: u64,
) -> Result<PathBuf> {
    ensure_dir(out_dir)?;
    let x = load_matrix(matrix)?;
    let e = read_embedding_csv(embedding)?;
    // reorder/subset the matrix columns onto the embedding's node order
    let xg = x.select_features(&e.node_names)?;
    let s = subject_representation(&xg, &e, parse_normalize(&cfg.normalize)?)?;
    let mut manifest = Manifest::new("represent", seed, to_json(cfg));
    manifest.add_input("matrix", matrix)?;
    manifest.add_input("embedding", embedding)?;
    let path = out_dir.join("representation.csv");
    write_omics_csv(&s, &path)?;
    manifest.add_output("representation.csv", &path)?;
    manifest.write(out_dir)?;
    Ok(path)
}

pub fn exec_export_coords(embedding: &Path, out: &Path) -> Result<()> {
    let e: EmbeddingMatrix = read_embedding_csv(embedding)?;
    let coords = pca_coords(&e)?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut w = csv::Writer::from_path(out).map_err(|e| CliError::Core(Error::Csv(e)))?;
    w.write_record(["node", "x", "y"])
        .map_err(|e| CliError::Core(Error::Csv(e)))?;
    for (name, (x, y)) in e.node_names.iter().zip(&coords) {
        w.write_record([name.clone(), format_value(*x), format_value(*y)])
            .map_err(|e| CliError::Core(Error::Csv(e)))?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// declarative run

pub fn exec_run(cfg: &RunConfig) -> Result<()> {
    let out_dir = &cfg.output_dir;
    ensure_dir(out_dir)?;
    let stage_seed = |stage: &str| omicsnet::derive_seed(cfg.seed, stage);

    let mut matrix: Option<PathBuf> = None;
    let mut phenotype: Option<(PathBuf, bool)> = None;
    let mut edges: Option<PathBuf> = None;
    let mut nodes: Option<PathBuf> = None;
    let mut embedding: Option<PathBuf> = None;

    let need = |explicit: &Option<PathBuf>,
                inherited: &Option<PathBuf>,
                what: &str,
                stage: &str,
                upstream: &str|
     -> Result<PathBuf> {
        explicit
            .clone()
            .or_else(|| inherited.clone())
            .ok_or_else(|| {
                CliError::config(format!(
                    "{stage} stage needs a {what}: set {stage}.{what} or add an [{upstream}] stage"
                ))
            })
    };

    if let Some(stage) = &cfg.ingest {
        let out = exec_ingest(stage, out_dir, stage_seed("ingest"))?;
        matrix = Some(out.matrix);
        phenotype = Some((out.phenotype, out.categorical));
    }

    if let Some(stage) = &cfg.select {
        let m = need(&stage.matrix, &matrix, "matrix", "select", "ingest")?;
        let phen: Option<(PathBuf, bool)> = stage
            .phenotype
            .clone()
            .map(|p| (p, stage.categorical))
            .or_else(|| phenotype.clone());
        let out = exec_select(
            stage,
            &m,
            phen.as_ref().map(|(p, c)| (p.as_path(), *c)),
            out_dir,
            stage_seed("select"),
        )?;
        matrix = Some(out.matrix);
    }

    if let Some(stage) = &cfg.network {
        let m = need(&stage.matrix, &matrix, "matrix", "network", "ingest")?;
        let out = exec_network(stage, &m, out_dir, stage_seed("network"))?;
        edges = Some(out.edges);
        nodes = Some(out.nodes);
    }

    if let Some(stage) = &cfg.cluster {
        let e = need(&stage.edges, &edges, "edges", "cluster", "network")?;
        let n = stage.nodes.clone().or_else(|| nodes.clone());
        // hybrid may inherit the cohort artifacts
        let mut stage = stage.clone();
        if stage.method == "hybrid" {
            if stage.matrix.is_none() {
                stage.matrix = matrix.clone();
            }
            if stage.phenotype.is_none() {
                if let Some((p, c)) = &phenotype {
                    stage.phenotype = Some(p.clone());
                    stage.categorical = *c;
                }
            }
        }
        exec_cluster(&stage, &e, n.as_deref(), out_dir, stage_seed("cluster"))?;
    }

    if let Some(stage) = &cfg.embed {
        let e = need(&stage.edges, &edges, "edges", "embed", "network")?;
        let n = stage.nodes.clone().or_else(|| nodes.clone());
        let m = need(&stage.matrix, &matrix, "matrix", "embed", "ingest")?;
        let phen = stage
            .phenotype
            .clone()
            .map(|p| (p, stage.categorical))
            .or_else(|| phenotype.clone())
            .ok_or_else(|| {
                CliError::config(
                    "embed stage needs a phenotype: set embed.phenotype or add an [ingest] stage",
                )
            })?;
        embedding = Some(exec_embed(
            stage,
            &e,
            n.as_deref(),
            &m,
            (&phen.0, phen.1),
            out_dir,
            stage_seed("embed"),
        )?);
    }

    if let Some(stage) = &cfg.predict {
        let e = need(&stage.edges, &edges, "edges", "predict", "network")?;
        let n = stage.nodes.clone().or_else(|| nodes.clone());
        let m = need(&stage.matrix, &matrix, "matrix", "predict", "ingest")?;
        let phen = stage
            .phenotype
            .clone()
            .or_else(|| phenotype.as_ref().map(|(p, _)| p.clone()))
            .ok_or_else(|| {
                CliError::config(
                    "predict stage needs a phenotype: set predict.phenotype or add an [ingest] stage",
                )
            })?;
        exec_predict(
            stage,
            &m,
            &phen,
            &e,
            n.as_deref(),
            out_dir,
            stage_seed("predict"),
        )?;
    }

    if let Some(stage) = &cfg.represent {
        let m = need(&stage.matrix, &matrix, "matrix", "represent", "ingest")?;
        let emb = need(
            &stage.embedding,
            &embedding,
            "embedding",
            "represent",
            "embed",
        )?;
        exec_represent(stage, &m, &emb, out_dir, stage_seed("represent"))?;
    }

    // echo the fully resolved config for round-tripping
    let resolved =
        toml::to_string_pretty(cfg).map_err(|e| CliError::config(format!("config echo: {e}")))?;
    std::fs::write(out_dir.join("resolved_config.toml"), resolved)?;
    Ok(())
}
