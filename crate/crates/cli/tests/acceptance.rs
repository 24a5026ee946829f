//! End-to-end acceptance checks. Each test verifies one release criterion
//! against independent oracles or closed-form values and prints a single
//! PASS line (visible with `cargo test -- --nocapture`).

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use omicsnet::community::{
    adjusted_rand_index, louvain, modularity, personalized_pagerank, Partition,
};
use omicsnet::featselect::anova_f_scores;
use omicsnet::gnn::train::{gradient_check, Objective, TrainConfig};
use omicsnet::gnn::{LayerKind, Mat};
use omicsnet::ingest::{
    load_omics_csv, write_omics_csv, write_phenotype_csv, OmicsMatrix, Orientation,
    PhenotypeValues, PhenotypeVector,
};
use omicsnet::netbuild::{
    correlation_network, import_network, knn_graph, similarity_network, snn_graph,
    soft_threshold_network, write_edge_list, CorrMethod, Edge, FeatureGraph, GraphMeta, KnnMode,
    Metric, Prune,
};
use omicsnet::pipeline::{predict_phenotype, PredictionConfig};
use omicsnet::synth::{planted_cohort, planted_partition_graph, CohortSpec};

fn random_matrix(rng: &mut ChaCha8Rng, ns: usize, nf: usize) -> OmicsMatrix {
    OmicsMatrix::new(
        (0..ns).map(|i| format!("S{i:03}")).collect(),
        (0..nf).map(|i| format!("f{i:03}")).collect(),
        "m",
        (0..ns * nf).map(|_| rng.gen_range(-2.0..2.0)).collect(),
    )
    .unwrap()
}

fn edge_map(g: &FeatureGraph) -> BTreeMap<(usize, usize), f64> {
    g.edges.iter().map(|e| ((e.i, e.j), e.weight)).collect()
}

fn assert_same_edges(
    actual: &FeatureGraph,
    oracle: &BTreeMap<(usize, usize), f64>,
    tol: f64,
    label: &str,
) {
    let got = edge_map(actual);
    assert_eq!(
        got.keys().collect::<Vec<_>>(),
        oracle.keys().collect::<Vec<_>>(),
        "{label}: edge sets differ"
    );
    for (k, w) in &got {
        let o = oracle[k];
        assert!(
            (w - o).abs() < tol,
            "{label}: edge {k:?} weight {w} vs oracle {o}"
        );
    }
}

// ---------------------------------------------------------------------------
// criterion 1: analytic gradients match finite differences

#[test]
fn gradients_match_finite_differences() {
    let start = Instant::now();
    let kinds = [
        LayerKind::Gcn,
        LayerKind::Gat {
            num_heads: 2,
            leaky_slope: 0.2,
        },
        LayerKind::Sage,
        LayerKind::Gin {
            epsilon: 0.1,
            learnable: true,
        },
    ];
    for graph_seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(graph_seed);
        let n = 6;
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(0.45) {
                    edges.push(Edge {
                        i,
                        j,
                        weight: rng.gen_range(0.1..1.0),
                    });
                }
            }
        }
        let g = FeatureGraph::new(
            (0..n).map(|i| format!("n{i}")).collect(),
            edges,
            GraphMeta::default(),
        )
        .unwrap();
        let features = Mat::from_vec(n, 4, (0..n * 4).map(|_| rng.gen_range(-1.0..1.0)).collect());
        for kind in &kinds {
            let cfg = TrainConfig {
                kind: kind.clone(),
                n_layers: 2,
                hidden_dim: 4,
                embedding_dim: 4,
                learning_rate: 0.01,
                momentum: 0.0,
                epochs: 1,
                objective: Objective::PhenotypeRegression,
                seed: graph_seed,
            };
            let err = gradient_check(&g, &features, &cfg, 1e-5).unwrap();
            assert!(
                err < 1e-4,
                "graph seed {graph_seed} kind {kind:?}: max gradient error {err}"
            );
        }
    }
    assert!(
        start.elapsed().as_secs() < 60,
        "gradient suite exceeded 60 s"
    );
    println!("criterion 1 (gradient correctness): PASS");
}

// ---------------------------------------------------------------------------
// criterion 2: Louvain against exhaustive enumeration and planted partitions

fn two_triangle_bridge() -> FeatureGraph {
    let edges = [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5), (2, 3)]
        .iter()
        .map(|&(i, j)| Edge { i, j, weight: 1.0 })
        .collect();
    FeatureGraph::new(
        ["a", "b", "c", "d", "e", "f"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        edges,
        GraphMeta::default(),
    )
    .unwrap()
}

/// All set partitions of {0..n-1} as restricted-growth strings.
fn all_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; n];
    fn rec(pos: usize, max_used: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos == current.len() {
            out.push(current.clone());
            return;
        }
        for c in 0..=max_used + 1 {
            current[pos] = c;
            rec(pos + 1, max_used.max(c), current, out);
        }
    }
    rec(1, 0, &mut current, &mut out);
    out
}

#[test]
fn louvain_matches_exhaustive_optimum_and_recovers_planted_blocks() {
    let start = Instant::now();
    let g = two_triangle_bridge();
    let p = louvain(&g, 0, 1.0).unwrap();
    assert!(
        (p.modularity - 5.0 / 14.0).abs() < 1e-12,
        "bridge modularity {} != 5/14",
        p.modularity
    );

    let partitions = all_partitions(6);
    assert_eq!(partitions.len(), 203);
    let best = partitions
        .iter()
        .map(|a| {
            modularity(
                &g,
                &Partition {
                    assignment: a.clone(),
                    modularity: 0.0,
                    method: String::new(),
                },
            )
            .unwrap()
        })
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(
        (p.modularity - best).abs() < 1e-12,
        "louvain {} vs exhaustive optimum {best}",
        p.modularity
    );

    let mut recovered = 0;
    for seed in 0..10u64 {
        let (pg, truth) = planted_partition_graph(4, 8, 0.9, 0.05, seed);
        let part = louvain(&pg, seed, 1.0).unwrap();
        if adjusted_rand_index(&part.assignment, &truth) >= 0.9 {
            recovered += 1;
        }
    }
    assert!(
        recovered >= 9,
        "planted partitions recovered in only {recovered}/10 runs"
    );
    assert!(
        start.elapsed().as_secs() < 30,
        "louvain suite exceeded 30 s"
    );
    println!("criterion 2 (louvain oracle): PASS");
}

// ---------------------------------------------------------------------------
// criterion 3: personalized PageRank conservation and fixed point

#[test]
fn pagerank_conserves_mass_and_matches_closed_form() {
    // 2-node closed form: p0 = 0.15 / (1 - 0.85^2), damping 0.85
    let g = FeatureGraph::new(
        vec!["a".into(), "b".into()],
        vec![Edge {
            i: 0,
            j: 1,
            weight: 1.0,
        }],
        GraphMeta::default(),
    )
    .unwrap();
    let v = personalized_pagerank(&g, &[(0, 1.0)], 0.85, 1e-12, 100_000).unwrap();
    assert!((v.scores[0] - 0.54054).abs() < 1e-6);
    assert!((v.scores[1] - 0.45946).abs() < 1e-6);

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10 {
        let n = rng.gen_range(4..12);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(0.4) {
                    edges.push(Edge {
                        i,
                        j,
                        weight: rng.gen_range(0.05..1.0),
                    });
                }
            }
        }
        let g = FeatureGraph::new(
            (0..n).map(|i| format!("n{i}")).collect(),
            edges,
            GraphMeta::default(),
        )
        .unwrap();
        let k = rng.gen_range(1..=n);
        let seeds: Vec<(usize, f64)> = (0..k).map(|i| (i, 1.0 / k as f64)).collect();
        let v = personalized_pagerank(&g, &seeds, 0.85, 1e-10, 100_000).unwrap();
        let sum: f64 = v.scores.iter().sum();
        assert!((sum - 1.0).abs() < 1e-10, "score sum {sum}");
        assert!(v.residual < 1e-9, "residual {}", v.residual);
    }
    println!("criterion 3 (personalized pagerank): PASS");
}

// ---------------------------------------------------------------------------
// criterion 4: network builders against brute-force oracles

fn oracle_pearson(x: &OmicsMatrix, i: usize, j: usize) -> f64 {
    let (a, b) = (x.column(i), x.column(j));
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(&b).map(|(p, q)| (p - ma) * (q - mb)).sum();
    let va: f64 = a.iter().map(|p| (p - ma) * (p - ma)).sum();
    let vb: f64 = b.iter().map(|q| (q - mb) * (q - mb)).sum();
    cov / (va * vb).sqrt()
}

fn oracle_cosine(x: &OmicsMatrix, i: usize, j: usize) -> f64 {
    let (a, b) = (x.column(i), x.column(j));
    let dot: f64 = a.iter().zip(&b).map(|(p, q)| p * q).sum();
    let na: f64 = a.iter().map(|p| p * p).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|q| q * q).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn oracle_knn_lists(x: &OmicsMatrix, k: usize) -> Vec<Vec<usize>> {
    let nf = x.n_features();
    (0..nf)
        .map(|i| {
            let mut cands: Vec<usize> = (0..nf).filter(|&j| j != i).collect();
            cands.sort_by(|&a, &b| {
                oracle_cosine(x, i, b)
                    .partial_cmp(&oracle_cosine(x, i, a))
                    .unwrap()
                    .then_with(|| x.feature_names[a].cmp(&x.feature_names[b]))
            });
            cands.truncate(k);
            cands
        })
        .collect()
}

#[test]
fn network_builders_match_brute_force_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let x = random_matrix(&mut rng, 15, 30);
        let nf = x.n_features();

        let mut corr_oracle = BTreeMap::new();
        let mut cos_oracle = BTreeMap::new();
        let mut euc_oracle = BTreeMap::new();
        for i in 0..nf {
            for j in i + 1..nf {
                let r = oracle_pearson(&x, i, j).abs();
                if r > 0.0 {
                    corr_oracle.insert((i, j), r);
                }
                let c = oracle_cosine(&x, i, j);
                if c > 0.0 {
                    cos_oracle.insert((i, j), c);
                }
                let d: f64 = x
                    .column(i)
                    .iter()
                    .zip(&x.column(j))
                    .map(|(p, q)| (p - q) * (p - q))
                    .sum::<f64>()
                    .sqrt();
                euc_oracle.insert((i, j), 1.0 / (1.0 + d));
            }
        }
        let corr = correlation_network(&x, CorrMethod::Pearson, Prune::None).unwrap();
        assert_same_edges(&corr, &corr_oracle, 1e-10, "correlation");
        let cos = similarity_network(&x, Metric::Cosine, Prune::None).unwrap();
        assert_same_edges(&cos, &cos_oracle, 1e-10, "cosine");
        let euc = similarity_network(&x, Metric::Euclidean, Prune::None).unwrap();
        assert_same_edges(&euc, &euc_oracle, 1e-10, "euclidean");

        // soft threshold: weights are |r|^beta for the chosen beta
        let grid: Vec<f64> = (1..=8).map(|b| b as f64).collect();
        let (soft, fit) = soft_threshold_network(&x, &grid, 0.8).unwrap();
        let soft_oracle: BTreeMap<(usize, usize), f64> = corr_oracle
            .iter()
            .map(|(&k, &r)| (k, r.powf(fit.chosen_beta)))
            .filter(|&(_, w)| w > 0.0)
            .collect();
        assert_same_edges(&soft, &soft_oracle, 1e-10, "soft-threshold");

        // beta = 1 equals the correlation network edge-for-edge
        let (soft1, fit1) = soft_threshold_network(&x, &[1.0], 0.0).unwrap();
        assert_eq!(fit1.chosen_beta, 1.0);
        assert_eq!(
            edge_map(&soft1).keys().collect::<Vec<_>>(),
            edge_map(&corr).keys().collect::<Vec<_>>()
        );
        for (k, w) in edge_map(&soft1) {
            assert!((w - corr_oracle[&k]).abs() < 1e-10);
        }

        // union kNN: an edge iff either side lists the other, positive cosine
        let k = 4;
        let lists = oracle_knn_lists(&x, k);
        let mut knn_oracle = BTreeMap::new();
        for (i, list) in lists.iter().enumerate() {
            for &j in list {
                let w = oracle_cosine(&x, i, j);
                if w > 0.0 {
                    knn_oracle.insert((i.min(j), i.max(j)), w);
                }
            }
        }
        let knn = knn_graph(&x, k, Metric::Cosine, KnnMode::Union).unwrap();
        assert_same_edges(&knn, &knn_oracle, 1e-10, "knn");

        // SNN: Jaccard overlap of the kNN selection lists
        let mut snn_oracle = BTreeMap::new();
        for i in 0..nf {
            for j in i + 1..nf {
                let si: std::collections::BTreeSet<usize> = lists[i].iter().copied().collect();
                let sj: std::collections::BTreeSet<usize> = lists[j].iter().copied().collect();
                let inter = si.intersection(&sj).count();
                if inter > 0 {
                    let union = si.union(&sj).count();
                    snn_oracle.insert((i, j), inter as f64 / union as f64);
                }
            }
        }
        let snn = snn_graph(&x, k).unwrap();
        assert_same_edges(&snn, &snn_oracle, 1e-10, "snn");
    }
    println!("criterion 4 (network builder oracles): PASS");
}

// ---------------------------------------------------------------------------
// criterion 5: ANOVA F equals the squared two-sample t statistic

#[test]
fn anova_f_equals_squared_t_on_two_groups() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        let n0 = rng.gen_range(3..15);
        let n1 = rng.gen_range(3..15);
        let values: Vec<f64> = (0..n0 + n1).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let x = OmicsMatrix::new(
            (0..n0 + n1).map(|i| format!("S{i:02}")).collect(),
            vec!["f0".into()],
            "m",
            values.clone(),
        )
        .unwrap();
        let labels: Vec<usize> = (0..n0 + n1).map(|i| usize::from(i >= n0)).collect();
        let y = PhenotypeVector {
            subject_ids: x.subject_ids.clone(),
            values: PhenotypeValues::Categorical {
                class_names: vec!["g0".into(), "g1".into()],
                labels,
            },
        };
        let f = anova_f_scores(&x, &y).unwrap()[0].score;

        // pooled-variance two-sample t
        let (a, b) = values.split_at(n0);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (ma, mb) = (mean(a), mean(b));
        let ss = |v: &[f64], m: f64| v.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
        let sp2 = (ss(a, ma) + ss(b, mb)) / (n0 + n1 - 2) as f64;
        let t = (ma - mb) / (sp2 * (1.0 / n0 as f64 + 1.0 / n1 as f64)).sqrt();
        let t2 = t * t;
        assert!(
            (f - t2).abs() <= 1e-10 * t2.abs().max(1.0),
            "F {f} vs t^2 {t2}"
        );
    }
    println!("criterion 5 (ANOVA equals squared t): PASS");
}

// ---------------------------------------------------------------------------
// criterion 6: end-to-end planted signal and shuffled-label control

#[test]
fn planted_signal_prediction_beats_baseline_and_null_control_does_not() {
    let start = Instant::now();
    let dataset = planted_cohort(&CohortSpec::default());
    let tags: Vec<String> = dataset
        .modalities
        .iter()
        .map(|m| m.modality.clone())
        .collect();
    let x = omicsnet::ingest::concat_modalities(&dataset, &tags).unwrap();
    let g = correlation_network(&x, CorrMethod::Pearson, Prune::Threshold(0.3)).unwrap();
    let cfg = PredictionConfig::default();

    let report = predict_phenotype(&dataset, &g, &cfg).unwrap();
    let majority = report.majority_rate;
    assert!((majority - 0.4).abs() < 1e-12);
    assert!(
        report.accuracy.mean >= 0.85,
        "planted-signal accuracy {} below 0.85",
        report.accuracy.mean
    );
    assert!(
        report.accuracy.mean >= majority + 0.15,
        "planted-signal accuracy {} not 0.15 above majority {majority}",
        report.accuracy.mean
    );

    // destroy the signal: shuffle labels, keep class counts
    let mut shuffled = dataset.clone();
    if let PhenotypeValues::Categorical { labels, .. } = &mut shuffled.phenotype.values {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        labels.shuffle(&mut rng);
    }
    let null_report = predict_phenotype(&shuffled, &g, &cfg).unwrap();
    assert!(
        (null_report.accuracy.mean - majority).abs() <= 0.1,
        "shuffled-label accuracy {} not within 0.1 of majority {majority}",
        null_report.accuracy.mean
    );
    assert!(
        start.elapsed().as_secs() < 600,
        "end-to-end suite exceeded 10 minutes"
    );
    println!("criterion 6 (end-to-end planted signal): PASS");
}

// ---------------------------------------------------------------------------
// criterion 7: the full declarative pipeline is byte-deterministic

fn collect_artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        let name = entry.file_name().to_string_lossy().into_owned();
        // manifests carry timestamps and the echoed config embeds the output
        // directory; everything else must be byte-identical
        if name.ends_with(".manifest.json") || name == "resolved_config.toml" {
            continue;
        }
        out.insert(name, std::fs::read(entry.path()).unwrap());
    }
    out
}

#[test]
fn full_pipeline_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let spec = CohortSpec {
        n_subjects: 60,
        modalities: vec![("mrna".into(), 8), ("mirna".into(), 6)],
        n_informative: 5,
        n_classes: 2,
        class_counts: vec![33, 27],
        seed: 11,
    };
    let d = planted_cohort(&spec);
    let mrna = dir.path().join("mrna.csv");
    let mirna = dir.path().join("mirna.csv");
    let pheno = dir.path().join("pheno.csv");
    write_omics_csv(&d.modalities[0], &mrna).unwrap();
    write_omics_csv(&d.modalities[1], &mirna).unwrap();
    write_phenotype_csv(&d.phenotype, &pheno).unwrap();

    let make_config = |out_dir: &Path| {
        format!(
            r#"
output_dir = "{out}"
seed = 5

[ingest]
omics = ["{mrna}", "{mirna}"]
tags = ["mrna", "mirna"]
phenotype = "{pheno}"
categorical = true

[select]
method = "anova"
categorical = true
top_k = 10

[network]
method = "pearson"
threshold = 0.15

[cluster]
method = "louvain"

[embed]
kind = "gcn"
layers = 2
hidden = 8
dim = 4
epochs = 20

[predict]
kind = "gcn"
gnn_hidden = 8
embedding_dim = 4
classifier_hidden = 16
epochs = 30
n_seeds = 2

[represent]
normalize = "none"
"#,
            out = out_dir.display(),
            mrna = mrna.display(),
            mirna = mirna.display(),
            pheno = pheno.display(),
        )
    };

    let mut artifact_sets = Vec::new();
    for run in 0..2 {
        let out_dir = dir.path().join(format!("run{run}"));
        let cfg_path = dir.path().join(format!("config{run}.toml"));
        std::fs::write(&cfg_path, make_config(&out_dir)).unwrap();
        let output = Command::new(env!("CARGO_BIN_EXE_omicsnet"))
            .args(["run", "--config"])
            .arg(&cfg_path)
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "run {run} failed: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        artifact_sets.push(collect_artifacts(&out_dir));
    }
    let [a, b] = <[_; 2]>::try_from(artifact_sets).unwrap();
    assert_eq!(
        a.keys().collect::<Vec<_>>(),
        b.keys().collect::<Vec<_>>(),
        "artifact sets differ"
    );
    assert!(
        a.len() >= 10,
        "expected a full artifact set, got {:?}",
        a.keys()
    );
    for (name, bytes) in &a {
        assert_eq!(bytes, &b[name], "artifact {name} differs between reruns");
    }
    println!("criterion 7 (pipeline determinism): PASS");
}

// ---------------------------------------------------------------------------
// criterion 8: CSV round trips are byte-identical

#[test]
fn omics_and_edge_list_round_trips_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for case in 0..100 {
        // omics matrix with occasional missing cells and mixed magnitudes
        let ns = rng.gen_range(2..10);
        let nf = rng.gen_range(2..10);
        let values: Vec<f64> = (0..ns * nf)
            .map(|_| match rng.gen_range(0..4) {
                0 => f64::NAN,
                1 => rng.gen_range(-5i32..5) as f64,
                2 => rng.gen::<f64>() * 1e6,
                _ => rng.gen::<f64>() * 1e-6 - 5e-7,
            })
            .collect();
        let x = OmicsMatrix::new(
            (0..ns).map(|i| format!("S{i}")).collect(),
            (0..nf).map(|i| format!("f{i}")).collect(),
            "m",
            values,
        )
        .unwrap();
        let p1 = dir.path().join(format!("m{case}_a.csv"));
        let p2 = dir.path().join(format!("m{case}_b.csv"));
        write_omics_csv(&x, &p1).unwrap();
        let loaded = load_omics_csv(&p1, "m", Orientation::SubjectsAsRows).unwrap();
        write_omics_csv(&loaded, &p2).unwrap();
        assert_eq!(
            std::fs::read(&p1).unwrap(),
            std::fs::read(&p2).unwrap(),
            "omics round trip {case} not byte-identical"
        );

        // edge list
        let n = rng.gen_range(2..12);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(0.5) {
                    edges.push(Edge {
                        i,
                        j,
                        weight: rng.gen_range(1e-6..1.0),
                    });
                }
            }
        }
        let g = FeatureGraph::new(
            (0..n).map(|i| format!("node{i:02}")).collect(),
            edges,
            GraphMeta::default(),
        )
        .unwrap();
        let e1 = dir.path().join(format!("e{case}_a.csv"));
        let e2 = dir.path().join(format!("e{case}_b.csv"));
        write_edge_list(&g, &e1).unwrap();
        let imported = import_network(&e1, Some(&g.node_names)).unwrap();
        write_edge_list(&imported, &e2).unwrap();
        assert_eq!(
            std::fs::read(&e1).unwrap(),
            std::fs::read(&e2).unwrap(),
            "edge-list round trip {case} not byte-identical"
        );
    }
    println!("criterion 8 (round-trip stability): PASS");
}
