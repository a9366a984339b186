//! `dgmae` command-line driver.
//!
//! Exit codes: 0 on success, 2 for usage errors, 3 for bad input data or
//! configuration, 4 when training diverges.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use dgmae::eval::{kmeans_cluster, linear_probe, mean_std, pairwise_similarity_histogram, write_metrics_csv, Split};
use dgmae::experiment::{dataset_runs, sweep_homophily, sweep_mask, write_sweep_csv, Variant};
use dgmae::graph::{edge_homophily, generate_synthetic, load_graph, local_feature_homophily, save_graph, SyntheticSpec};
use dgmae::model::embed;
use dgmae::train::{fit, load_checkpoint, save_checkpoint, RunConfig, SelectionMode};
use dgmae::{Dataset, LabelVector, Matrix};

const EXIT_DATA: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

#[derive(Parser)]
#[command(name = "dgmae", version, about = "Discrepancy-aware graph masked auto-encoder")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Selection {
    Adaptive,
    All,
}

impl From<Selection> for SelectionMode {
    fn from(s: Selection) -> Self {
        match s {
            Selection::Adaptive => SelectionMode::Adaptive,
            Selection::All => SelectionMode::All,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic graph and report its realized homophily.
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model and write its checkpoint and per-epoch losses.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Loss history CSV; defaults to `<out>.history.csv`.
        #[arg(long)]
        history: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "adaptive")]
        selection: Selection,
    },
    /// Write node representations of a trained model as CSV.
    Embed {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Linear-probe accuracy of embeddings.
    Probe {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long, default_value_t = 0.6)]
        train_frac: f64,
        #[arg(long, default_value_t = 0.2)]
        val_frac: f64,
        /// Number of random splits to average over.
        #[arg(long, default_value_t = 1)]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = dgmae::eval::DEFAULT_L2)]
        l2: f64,
        #[arg(long, default_value_t = dgmae::eval::DEFAULT_ITERS)]
        iters: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// k-means clustering metrics of embeddings.
    Cluster {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        /// Number of clusters; defaults to the number of classes.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Histogram of edge cosine similarities, split by label agreement.
    Similarity {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Probe accuracy of model variants with components removed.
    Ablate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Single variant to run; all four when omitted.
        #[arg(long)]
        variant: Option<Variant>,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Probe accuracy across synthetic homophily levels.
    SweepHomophily {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        h_list: Vec<f64>,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long, value_enum, default_value = "adaptive")]
        selection: Selection,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Probe accuracy across mask ratios on one synthetic family.
    SweepMask {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        ratios: Vec<f64>,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long, value_enum, default_value = "adaptive")]
        selection: Selection,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

/// Writes CSV to `path`, or to stdout when no path is given.
fn emit(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            write(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
        }
    }
    Ok(())
}

fn load_config(path: &Path) -> Result<RunConfig> {
    RunConfig::load(path).with_context(|| format!("cannot load config {}", path.display()))
}

fn load_dataset(path: &Path) -> Result<Dataset> {
    load_graph(path).with_context(|| format!("cannot load graph {}", path.display()))
}

fn labels(d: &Dataset) -> Result<&LabelVector> {
    d.labels.as_ref().context("graph file has no labels")
}

fn read_spec(path: &Path) -> Result<SyntheticSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid JSON in {}", path.display()))
}

fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    let mut w = create(path)?;
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

fn read_matrix(path: &Path) -> Result<Matrix> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("{}:{}: bad number", path.display(), i + 1))?;
        if rows.first().is_some_and(|r| r.len() != row.len()) {
            bail!("{}:{}: ragged row", path.display(), i + 1);
        }
        rows.push(row);
    }
    Ok(Matrix::from_rows(&rows))
}

fn check_rows(d: &Dataset, h: &Matrix) -> Result<()> {
    if h.rows() != d.graph.num_nodes() {
        bail!("{} embedding rows for {} nodes", h.rows(), d.graph.num_nodes());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { spec, out } => {
            let spec = read_spec(&spec)?;
            let (g, x, y) = generate_synthetic(&spec)?;
            save_graph(&out, &g, &x, Some(&y))?;
            let report = serde_json::json!({
                "nodes": g.num_nodes(),
                "edges": g.num_edges(),
                "target_h": spec.h,
                "edge_homophily": edge_homophily(&g, &y).ok(),
                "local_feature_homophily": local_feature_homophily(&g, &x)?.value,
            });
            println!("{report}");
        }
        Command::Train {
            config,
            data,
            out,
            history,
            selection,
        } => {
            let cfg = load_config(&config)?;
            let d = load_dataset(&data)?;
            let (params, hist) = fit(&cfg, &d.graph, &d.features, selection.into())?;
            save_checkpoint(&out, &params)?;
            let history = history.unwrap_or_else(|| {
                let mut p = out.clone().into_os_string();
                p.push(".history.csv");
                p.into()
            });
            let mut w = create(&history)?;
            hist.write_csv(&mut w)?;
            w.flush()?;
            if let Some(last) = hist.records.last() {
                eprintln!("trained {} epochs, final loss {:.6}", last.epoch, last.loss_total);
            }
        }
        Command::Embed { checkpoint, data, out } => {
            let params = load_checkpoint(&checkpoint)
                .with_context(|| format!("cannot load checkpoint {}", checkpoint.display()))?;
            let d = load_dataset(&data)?;
            if params.in_dim() != d.features.cols() {
                bail!("checkpoint expects {} features, data has {}", params.in_dim(), d.features.cols());
            }
            write_matrix(&out, &embed(&params, &d.graph, &d.features)?)?;
        }
        Command::Probe {
            data,
            embeddings,
            train_frac,
            val_frac,
            runs,
            seed,
            l2,
            iters,
            out,
        } => {
            let d = load_dataset(&data)?;
            let h = read_matrix(&embeddings)?;
            check_rows(&d, &h)?;
            let y = labels(&d)?;
            let accs = (0..runs.max(1))
                .map(|r| {
                    let split = Split::random(h.rows(), train_frac, val_frac, seed + r)?;
                    Ok(linear_probe(&h, y, &split, l2, iters)?.test_accuracy)
                })
                .collect::<Result<Vec<_>, dgmae::Error>>()?;
            let (mean, std) = mean_std(&accs);
            emit(out.as_deref(), |w| write_metrics_csv(w, &[("accuracy", mean, std)]))?;
        }
        Command::Cluster {
            data,
            embeddings,
            k,
            runs,
            seed,
            out,
        } => {
            let d = load_dataset(&data)?;
            let h = read_matrix(&embeddings)?;
            check_rows(&d, &h)?;
            let y = labels(&d)?;
            let summary = kmeans_cluster(&h, y, k.unwrap_or(y.classes()), runs, seed)?;
            emit(out.as_deref(), |w| summary.write_csv(w))?;
        }
        Command::Similarity { data, embeddings, out } => {
            let d = load_dataset(&data)?;
            let h = read_matrix(&embeddings)?;
            check_rows(&d, &h)?;
            let s = pairwise_similarity_histogram(&h, &d.graph, labels(&d)?);
            eprintln!("mean cosine: homo {:.6}, hetero {:.6}", s.homo_mean, s.hetero_mean);
            emit(out.as_deref(), |w| s.write_csv(w))?;
        }
        Command::Ablate {
            data,
            config,
            variant,
            seeds,
            out,
        } => {
            let cfg = load_config(&config)?;
            let d = load_dataset(&data)?;
            let y = labels(&d)?;
            let seeds: Vec<u64> = (0..seeds).map(|s| cfg.seed + s).collect();
            let variants = variant.map_or(Variant::ALL.to_vec(), |v| vec![v]);
            let mut rows = Vec::new();
            for v in variants {
                let (vcfg, mode) = v.apply(&cfg);
                let accs = dataset_runs(&d.graph, &d.features, y, &vcfg, mode, &seeds)?;
                rows.push((v.name(), mean_std(&accs)));
            }
            emit(out.as_deref(), |w| {
                writeln!(w, "variant,acc_mean,acc_std")?;
                for (name, (m, s)) in &rows {
                    writeln!(w, "{name},{m:?},{s:?}")?;
                }
                Ok(())
            })?;
        }
        Command::SweepHomophily {
            spec,
            config,
            h_list,
            seeds,
            selection,
            out,
        } => {
            let spec = read_spec(&spec)?;
            let cfg = load_config(&config)?;
            let seeds: Vec<u64> = (0..seeds).map(|s| spec.seed + s).collect();
            let rows = sweep_homophily(&spec, &cfg, selection.into(), &h_list, &seeds)?;
            emit(out.as_deref(), |w| write_sweep_csv(w, "h", &rows))?;
        }
        Command::SweepMask {
            spec,
            config,
            ratios,
            seeds,
            selection,
            out,
        } => {
            let spec = read_spec(&spec)?;
            let cfg = load_config(&config)?;
            let seeds: Vec<u64> = (0..seeds).map(|s| spec.seed + s).collect();
            let rows = sweep_mask(&spec, &cfg, selection.into(), &ratios, &seeds)?;
            emit(out.as_deref(), |w| write_sweep_csv(w, "ratio", &rows))?;
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err
        .chain()
        .filter_map(|e| e.downcast_ref::<dgmae::Error>())
        .any(dgmae::Error::is_numerical);
    if numerical {
        EXIT_NUMERICAL
    } else {
        EXIT_DATA
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("DGMAE_THREADS") {
        let n: usize = v.parse().with_context(|| format!("DGMAE_THREADS={v:?} is not a count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|()| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
