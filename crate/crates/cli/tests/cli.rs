//! Black-box tests of the `omicsnet` binary: artifacts, exit codes, and help.

use std::path::Path;
use std::process::{Command, Output};

fn omicsnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_omicsnet"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn every_subcommand_has_help() {
    for sub in [
        "ingest",
        "select",
        "build-net",
        "cluster",
        "embed",
        "predict",
        "represent",
        "export-coords",
        "run",
    ] {
        let out = omicsnet(&[sub, "--help"]);
        assert!(out.status.success(), "{sub} --help failed");
        assert!(!out.stdout.is_empty());
    }
}

fn write_small_matrix(path: &Path) {
    // 4 features with a clear correlation structure
    let mut s = String::from("subject,f1,f2,f3,f4\n");
    for i in 0..8 {
        let t = i as f64;
        s.push_str(&format!(
            "S{i},{},{},{},{}\n",
            t,
            t * 2.0 + 0.1 * (i % 3) as f64,
            -t + 0.2 * (i % 2) as f64,
            (i % 3) as f64
        ));
    }
    std::fs::write(path, s).unwrap();
}

#[test]
fn build_net_writes_edges_nodes_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("matrix.csv");
    write_small_matrix(&matrix);
    let out_dir = dir.path().join("net");
    let out = omicsnet(&[
        "build-net",
        "--matrix",
        matrix.to_str().unwrap(),
        "--method",
        "pearson",
        "--threshold",
        "0.5",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let mut names: Vec<String> = std::fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names, ["edges.csv", "network.manifest.json", "nodes.txt"]);

    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out_dir.join("network.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["format_version"], "1");
    assert_eq!(manifest["stage"], "network");
    let digest = manifest["outputs"]["edges.csv"].as_str().unwrap();
    assert!(
        digest.starts_with("sha256:") && digest.len() == 71,
        "bad digest {digest}"
    );
}

#[test]
fn cluster_splits_two_triangles() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("edges.csv");
    std::fs::write(
        &edges,
        "source,target,weight\na,b,1\na,c,1\nb,c,1\nc,d,1\nd,e,1\nd,f,1\ne,f,1\n",
    )
    .unwrap();
    let out = omicsnet(&[
        "cluster",
        "--edges",
        edges.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let partition = std::fs::read_to_string(dir.path().join("partition.csv")).unwrap();
    let mut by_node = std::collections::BTreeMap::new();
    for line in partition.lines().skip(1) {
        let (node, community) = line.split_once(',').unwrap();
        by_node.insert(node.to_string(), community.to_string());
    }
    assert_eq!(by_node.len(), 6);
    assert_eq!(by_node["a"], by_node["b"]);
    assert_eq!(by_node["b"], by_node["c"]);
    assert_eq!(by_node["d"], by_node["e"]);
    assert_eq!(by_node["e"], by_node["f"]);
    assert_ne!(by_node["a"], by_node["d"]);
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        "output_dir = \"out\"\nnot_a_real_key = 1\n\n[network]\nmethod = \"pearson\"\n",
    )
    .unwrap();
    let out = omicsnet(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn missing_input_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = omicsnet(&[
        "build-net",
        "--matrix",
        dir.path().join("nope.csv").to_str().unwrap(),
        "--method",
        "pearson",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn network_only_run_writes_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("matrix.csv");
    write_small_matrix(&matrix);
    let out_dir = dir.path().join("out");
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "output_dir = \"{}\"\n\n[network]\nmatrix = \"{}\"\nmethod = \"cosine\"\n",
            out_dir.display(),
            matrix.display()
        ),
    )
    .unwrap();
    let out = omicsnet(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in [
        "edges.csv",
        "nodes.txt",
        "network.manifest.json",
        "resolved_config.toml",
    ] {
        assert!(out_dir.join(f).exists(), "missing {f}");
    }
}

#[test]
fn export_coords_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let emb = dir.path().join("embedding.csv");
    std::fs::write(&emb, "node,e1,e2,e3\na,1,0,0\nb,0,1,0\nc,0,0,1\nd,1,1,1\n").unwrap();
    let coords = dir.path().join("coords.csv");
    let out = omicsnet(&[
        "export-coords",
        "--embedding",
        emb.to_str().unwrap(),
        "--out",
        coords.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let body = std::fs::read_to_string(&coords).unwrap();
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(lines[0], "node,x,y");
    assert_eq!(lines.len(), 5);
    for line in &lines[1..] {
        let parts: Vec<&str> = line.split(',').collect();
        assert_eq!(parts.len(), 3);
        parts[1].parse::<f64>().unwrap();
        parts[2].parse::<f64>().unwrap();
    }
}
