use std::path::Path;
use std::process::{Command, Output};

use dgmae::graph::SyntheticSpec;
use dgmae::train::RunConfig;

fn dgmae(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dgmae"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("failed to launch dgmae")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = dgmae(args, dir);
    assert!(
        out.status.success(),
        "dgmae {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn setup(dir: &Path) {
    let spec = SyntheticSpec {
        n: 80,
        classes: 3,
        h: 0.3,
        avg_degree: 4.0,
        feature_dim: 8,
        class_sep: 3.0,
        seed: 2,
    };
    std::fs::write(dir.join("spec.json"), serde_json::to_string(&spec).unwrap()).unwrap();
    let cfg = RunConfig {
        epochs: 5,
        hidden_dim: 8,
        heads: 2,
        num_layers: 1,
        ..RunConfig::default()
    };
    std::fs::write(dir.join("config.json"), cfg.to_json()).unwrap();
    ok(&["generate", "--spec", "spec.json", "--out", "graph.txt"], dir);
}

#[test]
fn full_pipeline_writes_expected_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    setup(d);
    ok(&["train", "--config", "config.json", "--data", "graph.txt", "--out", "m.ckpt"], d);
    let hist = std::fs::read_to_string(d.join("m.ckpt.history.csv")).unwrap();
    assert!(hist.starts_with("epoch,loss_f,loss_d,loss_total\n"));
    assert_eq!(hist.lines().count(), 6);

    ok(&["embed", "--checkpoint", "m.ckpt", "--data", "graph.txt", "--out", "h.csv"], d);
    let emb = std::fs::read_to_string(d.join("h.csv")).unwrap();
    assert_eq!(emb.lines().count(), 80);
    assert!(emb.lines().all(|l| l.split(',').count() == 8));

    let probe = ok(&["probe", "--data", "graph.txt", "--embeddings", "h.csv"], d);
    assert!(probe.starts_with("metric,value,std\naccuracy,"));

    let cluster = ok(&["cluster", "--data", "graph.txt", "--embeddings", "h.csv", "--runs", "2"], d);
    let keys: Vec<&str> = cluster.lines().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(keys, ["metric", "acc", "nmi", "ari", "f1"]);

    let sim = ok(&["similarity", "--data", "graph.txt", "--embeddings", "h.csv"], d);
    assert_eq!(sim.lines().count(), 51);

    let ablate = ok(&["ablate", "--data", "graph.txt", "--config", "config.json", "--seeds", "1"], d);
    let variants: Vec<&str> = ablate.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(variants, ["no-selection", "no-feature", "no-discrepancy", "full"]);

    let sweep = ok(
        &["sweep-mask", "--spec", "spec.json", "--config", "config.json", "--ratios", "0.3,0.6", "--seeds", "1"],
        d,
    );
    assert!(sweep.starts_with("ratio,acc_mean,acc_std\n0.3,"));
    let sweep = ok(
        &["sweep-homophily", "--spec", "spec.json", "--config", "config.json", "--h-list", "0.2", "--seeds", "1"],
        d,
    );
    assert!(sweep.starts_with("h,acc_mean,acc_std\n0.2,"));
}

#[test]
fn generate_reports_realized_homophily() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(
        d.join("spec.json"),
        r#"{"n":100,"classes":2,"h":1.0,"avg_degree":4,"feature_dim":4,"class_sep":1,"seed":0}"#,
    )
    .unwrap();
    let report: serde_json::Value =
        serde_json::from_str(&ok(&["generate", "--spec", "spec.json", "--out", "g.txt"], d)).unwrap();
    assert_eq!(report["edge_homophily"], 1.0);
    assert_eq!(report["nodes"], 100);
}

#[test]
fn exit_codes_separate_usage_data_and_numerical_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    setup(d);
    let code = |args: &[&str]| dgmae(args, d).status.code();

    assert_eq!(code(&["train", "--config", "config.json"]), Some(2));
    assert_eq!(code(&["ablate", "--data", "graph.txt", "--config", "config.json", "--variant", "bogus"]), Some(2));

    assert_eq!(code(&["train", "--config", "missing.json", "--data", "graph.txt", "--out", "x"]), Some(3));
    std::fs::write(d.join("partial.json"), r#"{"lambda":0.5}"#).unwrap();
    assert_eq!(code(&["train", "--config", "partial.json", "--data", "graph.txt", "--out", "x"]), Some(3));
    std::fs::write(d.join("bad.txt"), "not a graph\n").unwrap();
    assert_eq!(code(&["train", "--config", "config.json", "--data", "bad.txt", "--out", "x"]), Some(3));

    let cfg = RunConfig {
        lr: 1e300,
        ..RunConfig::from_json(&std::fs::read_to_string(d.join("config.json")).unwrap()).unwrap()
    };
    std::fs::write(d.join("diverge.json"), cfg.to_json()).unwrap();
    assert_eq!(code(&["train", "--config", "diverge.json", "--data", "graph.txt", "--out", "x"]), Some(4));
}

#[test]
fn embeddings_must_match_the_graph() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    setup(d);
    std::fs::write(d.join("short.csv"), "0.1,0.2\n0.3,0.4\n").unwrap();
    let out = dgmae(&["probe", "--data", "graph.txt", "--embeddings", "short.csv"], d);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("2 embedding rows for 80 nodes"));
}
