//! Train-then-evaluate pipelines: ablation variants and the homophily and
//! mask-ratio sweeps. Seeds run in parallel on the current rayon pool; each
//! run is fully determined by its seed, so results do not depend on the
//! thread count.

use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::Error;
use crate::eval::{linear_probe, mean_std, pairwise_similarity_histogram, Split, DEFAULT_ITERS, DEFAULT_L2};
use crate::graph::{generate_synthetic, Graph, LabelVector, SyntheticSpec};
use crate::matrix::{FeatureMatrix, Matrix};
use crate::model::{embed, ModelParams};
use crate::train::{fit, History, RunConfig, SelectionMode};

/// Train/validation fractions of the random probe split; the rest is test.
pub const TRAIN_FRAC: f64 = 0.6;
pub const VAL_FRAC: f64 = 0.2;

/// Model variants of the component ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Full,
    /// Every arc enters the discrepancy target.
    NoSelection,
    /// Discrepancy reconstruction only.
    NoFeature,
    /// Feature reconstruction only.
    NoDiscrepancy,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::NoSelection,
        Variant::NoFeature,
        Variant::NoDiscrepancy,
        Variant::Full,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoSelection => "no-selection",
            Variant::NoFeature => "no-feature",
            Variant::NoDiscrepancy => "no-discrepancy",
        }
    }

    /// Config and selection mode realising this variant on top of `base`.
    pub fn apply(self, base: &RunConfig) -> (RunConfig, SelectionMode) {
        let mut cfg = base.clone();
        let mut mode = SelectionMode::Adaptive;
        match self {
            Variant::Full => {}
            Variant::NoSelection => mode = SelectionMode::All,
            Variant::NoFeature => cfg.lambda = 1.0,
            Variant::NoDiscrepancy => cfg.lambda = 0.0,
        }
        (cfg, mode)
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant {s:?}")))
    }
}

/// Outcome of one train-and-probe run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub params: ModelParams,
    pub history: History,
    pub embeddings: Matrix,
    pub test_accuracy: f64,
}

/// Trains on the whole graph, embeds it and probes on a random split seeded
/// by `split_seed`.
pub fn train_and_probe(
    graph: &Graph,
    features: &FeatureMatrix,
    labels: &LabelVector,
    cfg: &RunConfig,
    mode: SelectionMode,
    split_seed: u64,
) -> Result<RunOutcome, Error> {
    let (params, history) = fit(cfg, graph, features, mode)?;
    let embeddings = embed(&params, graph, features)?;
    let split = Split::random(graph.num_nodes(), TRAIN_FRAC, VAL_FRAC, split_seed)?;
    let probe = linear_probe(&embeddings, labels, &split, DEFAULT_L2, DEFAULT_ITERS)?;
    Ok(RunOutcome {
        params,
        history,
        embeddings,
        test_accuracy: probe.test_accuracy,
    })
}

/// Per-seed measurements of one synthetic run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticRun {
    pub seed: u64,
    pub accuracy: f64,
    pub hetero_similarity: f64,
    pub homo_similarity: f64,
}

/// Generates the graph for `spec` with `spec.seed = seed`, trains with
/// `cfg.seed = seed`, and probes on a split drawn from the same seed.
pub fn synthetic_run(
    spec: &SyntheticSpec,
    cfg: &RunConfig,
    mode: SelectionMode,
    seed: u64,
) -> Result<SyntheticRun, Error> {
    let spec = SyntheticSpec { seed, ..spec.clone() };
    let (graph, features, labels) = generate_synthetic(&spec)?;
    let cfg = RunConfig { seed, ..cfg.clone() };
    let out = train_and_probe(&graph, &features, &labels, &cfg, mode, seed)?;
    let sim = pairwise_similarity_histogram(&out.embeddings, &graph, &labels);
    Ok(SyntheticRun {
        seed,
        accuracy: out.test_accuracy,
        hetero_similarity: sim.hetero_mean,
        homo_similarity: sim.homo_mean,
    })
}

/// [`synthetic_run`] for every seed, in parallel, returned in seed order.
pub fn synthetic_runs(
    spec: &SyntheticSpec,
    cfg: &RunConfig,
    mode: SelectionMode,
    seeds: &[u64],
) -> Result<Vec<SyntheticRun>, Error> {
    seeds
        .par_iter()
        .map(|&s| synthetic_run(spec, cfg, mode, s))
        .collect()
}

/// Probe accuracy of `cfg` on a fixed dataset for every seed, in parallel.
/// Each seed sets both the training seed and the probe split.
pub fn dataset_runs(
    graph: &Graph,
    features: &FeatureMatrix,
    labels: &LabelVector,
    cfg: &RunConfig,
    mode: SelectionMode,
    seeds: &[u64],
) -> Result<Vec<f64>, Error> {
    seeds
        .par_iter()
        .map(|&seed| {
            let cfg = RunConfig { seed, ..cfg.clone() };
            Ok(train_and_probe(graph, features, labels, &cfg, mode, seed)?.test_accuracy)
        })
        .collect()
}

/// One grid point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub acc_mean: f64,
    pub acc_std: f64,
}

fn summarize(value: f64, runs: &[SyntheticRun]) -> SweepRow {
    let accs: Vec<f64> = runs.iter().map(|r| r.accuracy).collect();
    let (acc_mean, acc_std) = mean_std(&accs);
    SweepRow {
        value,
        acc_mean,
        acc_std,
    }
}

fn check_grid(grid: &[f64], seeds: &[u64]) -> Result<(), Error> {
    if grid.is_empty() {
        return Err(Error::Config("empty sweep grid".into()));
    }
    if seeds.is_empty() {
        return Err(Error::Config("no seeds".into()));
    }
    Ok(())
}

/// Probe accuracy across target homophily levels.
pub fn sweep_homophily(
    base: &SyntheticSpec,
    cfg: &RunConfig,
    mode: SelectionMode,
    h_list: &[f64],
    seeds: &[u64],
) -> Result<Vec<SweepRow>, Error> {
    check_grid(h_list, seeds)?;
    h_list
        .iter()
        .map(|&h| {
            let spec = SyntheticSpec { h, ..base.clone() };
            Ok(summarize(h, &synthetic_runs(&spec, cfg, mode, seeds)?))
        })
        .collect()
}

/// Probe accuracy across mask ratios.
pub fn sweep_mask(
    spec: &SyntheticSpec,
    cfg: &RunConfig,
    mode: SelectionMode,
    ratios: &[f64],
    seeds: &[u64],
) -> Result<Vec<SweepRow>, Error> {
    check_grid(ratios, seeds)?;
    ratios
        .iter()
        .map(|&r| {
            let cfg = RunConfig {
                mask_ratio: r,
                ..cfg.clone()
            };
            Ok(summarize(r, &synthetic_runs(spec, &cfg, mode, seeds)?))
        })
        .collect()
}

/// Writes sweep rows under the header `{key},acc_mean,acc_std`.
pub fn write_sweep_csv<W: Write>(mut w: W, key: &str, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(w, "{key},acc_mean,acc_std")?;
    for r in rows {
        writeln!(w, "{:?},{:?},{:?}", r.value, r.acc_mean, r.acc_std)?;
    }
    Ok(())
}
