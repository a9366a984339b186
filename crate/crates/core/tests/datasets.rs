//! Checks against real benchmark graphs. They run only when the matching
//! environment variable points at a graph file with labels, e.g.
//! `DGMAE_CORA=/data/cora.txt cargo test -p dgmae --test datasets`.

use dgmae::eval::{linear_probe, Split, DEFAULT_ITERS, DEFAULT_L2};
use dgmae::graph::{edge_homophily, load_graph};
use dgmae::model::embed;
use dgmae::train::{fit, RunConfig, SelectionMode};

fn dataset(var: &str) -> Option<dgmae::Dataset> {
    let path = std::env::var_os(var)?;
    Some(load_graph(&path).unwrap_or_else(|e| panic!("{var}: {e}")))
}

#[test]
fn cora_edge_homophily() {
    let Some(d) = dataset("DGMAE_CORA") else {
        eprintln!("DGMAE_CORA not set; skipping");
        return;
    };
    let h = edge_homophily(&d.graph, d.labels.as_ref().expect("labels")).unwrap();
    assert!((h - 0.81).abs() <= 0.005, "edge homophily {h}");
}

#[test]
fn texas_probe_accuracy() {
    let Some(d) = dataset("DGMAE_TEXAS") else {
        eprintln!("DGMAE_TEXAS not set; skipping");
        return;
    };
    let labels = d.labels.as_ref().expect("labels");
    let base = RunConfig::preset("texas").unwrap();
    let mut accs = Vec::new();
    for seed in 0..10 {
        let cfg = RunConfig { seed, ..base.clone() };
        let (params, _) = fit(&cfg, &d.graph, &d.features, SelectionMode::Adaptive).unwrap();
        let h = embed(&params, &d.graph, &d.features).unwrap();
        let split = Split::random(d.graph.num_nodes(), 0.48, 0.32, seed).unwrap();
        accs.push(linear_probe(&h, labels, &split, DEFAULT_L2, DEFAULT_ITERS).unwrap().test_accuracy);
    }
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    eprintln!("texas accuracies {accs:?}, mean {mean}");
    assert!(mean >= 0.75, "mean accuracy {mean}");
}
