//! Training loop: per-epoch masking and discrepancy selection, the two
//! reconstruction branches, and AdamW updates.

mod checkpoint;
mod config;
mod optim;

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use config::RunConfig;
pub use optim::OptimizerState;

use crate::autodiff::Tape;
use crate::error::Error;
use crate::graph::Graph;
use crate::loss::{discrepancy_loss, feature_loss, COSINE_EPS};
use crate::matrix::{FeatureMatrix, Matrix};
use crate::model::{
    apply_mask, bridge, decode, embedding_discrepancy, encode, masked_discrepancy_target, project,
    sample_mask, select_discrepancy_edges, Architecture, AttentionArcs, EdgeSelectionMask,
    ModelParams,
};

/// Decoder heads; not part of [`RunConfig`].
pub const DECODER_HEADS: usize = 1;

const STREAM_INIT: u64 = 0;
const STREAM_MASK: u64 = 1;
const STREAM_SELECT: u64 = 2;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based seed for `(stream, counter)` under the run seed.
pub fn derive_seed(seed: u64, stream: u64, counter: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(stream)) ^ counter)
}

/// How discrepancy arcs are chosen each epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionMode {
    /// Attention-guided Bernoulli sampling.
    #[default]
    Adaptive,
    /// Every arc, i.e. the plain Laplacian difference.
    All,
}

/// Losses of one step. A branch whose weight is zero is not evaluated and
/// reports 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLosses {
    pub loss_f: f64,
    pub loss_d: f64,
    pub total: f64,
}

/// Inputs that stay fixed over a run.
#[derive(Debug, Clone)]
pub struct TrainingData<'a> {
    pub graph: &'a Graph,
    pub features: &'a FeatureMatrix,
    arcs: AttentionArcs,
    normalized: Matrix,
}

impl<'a> TrainingData<'a> {
    pub fn new(graph: &'a Graph, features: &'a FeatureMatrix) -> Result<Self, Error> {
        if features.rows() != graph.num_nodes() {
            return Err(crate::error::ShapeError::new(
                "training data",
                format!("{} feature rows for {} nodes", features.rows(), graph.num_nodes()),
            )
            .into());
        }
        if !features.is_finite() {
            return Err(Error::Config("features contain non-finite values".into()));
        }
        Ok(Self {
            graph,
            features,
            arcs: AttentionArcs::new(graph),
            normalized: features.row_normalized(COSINE_EPS),
        })
    }
}

/// Fresh parameters for `cfg` on inputs of width `in_dim`.
pub fn init_params(cfg: &RunConfig, in_dim: usize) -> ModelParams {
    let arch = Architecture {
        in_dim,
        hidden_dim: cfg.hidden_dim,
        heads: cfg.heads,
        num_layers: cfg.num_layers,
        decoder_heads: DECODER_HEADS,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_INIT, 0));
    ModelParams::init(&arch, &mut rng)
}

/// One optimisation step at `epoch`.
pub fn train_step(
    params: &mut ModelParams,
    opt: &mut OptimizerState,
    data: &TrainingData<'_>,
    cfg: &RunConfig,
    epoch: u64,
    mode: SelectionMode,
) -> Result<StepLosses, Error> {
    let n = data.graph.num_nodes();
    let lambda = cfg.lambda;
    let plan = sample_mask(n, cfg.mask_ratio, derive_seed(cfg.seed, STREAM_MASK, epoch));

    let mut tape = Tape::new();
    let bound = params.bind(&mut tape);

    let x_masked = tape.constant(apply_mask(data.features, &plan));
    let masked = encode(&mut tape, &bound, x_masked, &data.arcs)?;
    let h = bridge(&mut tape, &bound, masked.hidden)?;
    let z_hat = decode(&mut tape, &bound, h, &data.arcs)?;

    let mut terms = Vec::with_capacity(2);
    let mut losses = StepLosses {
        loss_f: 0.0,
        loss_d: 0.0,
        total: 0.0,
    };
    if lambda < 1.0 {
        let lf = feature_loss(&mut tape, z_hat, &data.normalized, &plan, cfg.gamma1)?;
        losses.loss_f = tape.scalar(lf);
        terms.push(tape.scale(lf, 1.0 - lambda)?);
    }
    if lambda > 0.0 {
        let x = tape.constant(data.features.clone());
        let full = encode(&mut tape, &bound, x, &data.arcs)?;
        let z = project(&mut tape, &bound.projector, full.hidden)?;
        let z_d = embedding_discrepancy(&mut tape, z, z_hat)?;
        let selection = match mode {
            SelectionMode::Adaptive => select_discrepancy_edges(
                &masked.attention.edge_weights(),
                cfg.p_c,
                cfg.p_tau,
                derive_seed(cfg.seed, STREAM_SELECT, epoch),
            ),
            SelectionMode::All => EdgeSelectionMask::all(data.graph.num_arcs()),
        };
        let x_d = masked_discrepancy_target(&data.normalized, data.graph, &selection);
        let ld = discrepancy_loss(&mut tape, z_d, &x_d, &plan, cfg.gamma2)?;
        losses.loss_d = tape.scalar(ld);
        terms.push(tape.scale(ld, lambda)?);
    }
    let total = match terms[..] {
        [t] => t,
        [a, b] => tape.add(a, b)?,
        _ => unreachable!("lambda lies in [0, 1]"),
    };
    losses.total = tape.scalar(total);
    if !losses.total.is_finite() {
        return Err(Error::Numerical {
            epoch: epoch as usize,
            detail: format!("loss is {}", losses.total),
        });
    }

    let mut grads = tape.backward(total)?;
    let handles = bound.tensors();
    let grads: Vec<Option<Matrix>> = handles.iter().map(|&&v| grads.take(v)).collect();
    opt.update(params.tensors_mut(), &grads, cfg.lr, cfg.weight_decay);
    if !params.is_finite() {
        return Err(Error::Numerical {
            epoch: epoch as usize,
            detail: "parameters became non-finite".into(),
        });
    }
    Ok(losses)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss_f: f64,
    pub loss_d: f64,
    pub loss_total: f64,
}

/// Per-epoch losses of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub records: Vec<EpochRecord>,
}

impl History {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn totals(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.loss_total).collect()
    }

    /// `epoch,loss_f,loss_d,loss_total`, one row per epoch.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "epoch,loss_f,loss_d,loss_total")?;
        for r in &self.records {
            writeln!(w, "{},{:?},{:?},{:?}", r.epoch, r.loss_f, r.loss_d, r.loss_total)?;
        }
        Ok(())
    }
}

/// Trains from scratch for `cfg.epochs` epochs.
pub fn fit(
    cfg: &RunConfig,
    graph: &Graph,
    features: &FeatureMatrix,
    mode: SelectionMode,
) -> Result<(ModelParams, History), Error> {
    cfg.validate()?;
    let data = TrainingData::new(graph, features)?;
    let mut params = init_params(cfg, features.cols());
    let mut opt = OptimizerState::new(params.tensors());
    let mut history = History::default();
    for epoch in 0..cfg.epochs {
        let l = train_step(&mut params, &mut opt, &data, cfg, epoch as u64, mode)?;
        history.records.push(EpochRecord {
            epoch: epoch + 1,
            loss_f: l.loss_f,
            loss_d: l.loss_d,
            loss_total: l.total,
        });
    }
    Ok((params, history))
}
