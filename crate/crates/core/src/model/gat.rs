use crate::autodiff::{Tape, Var};
use crate::error::{ShapeError, TensorError};
use crate::graph::Graph;
use crate::matrix::Matrix;

use super::params::{GatLayerParams, ModelParams, Projector};

/// Arc lists used for attention: every graph arc, followed by one self-loop
/// per node.
///
/// Arc `k < num_graph_arcs` has the same id as in [`Graph::arcs`]. The
/// receiving node of an arc is `dst[k]`, the message comes from `src[k]`.
#[derive(Debug, Clone)]
pub struct AttentionArcs {
    pub dst: Vec<usize>,
    pub src: Vec<usize>,
    pub num_nodes: usize,
    pub num_graph_arcs: usize,
}

impl AttentionArcs {
    pub fn new(g: &Graph) -> Self {
        let n = g.num_nodes();
        let m = g.num_arcs();
        let mut dst = Vec::with_capacity(m + n);
        let mut src = Vec::with_capacity(m + n);
        for (i, j) in g.arcs() {
            dst.push(i);
            src.push(j);
        }
        dst.extend(0..n);
        src.extend(0..n);
        Self {
            dst,
            src,
            num_nodes: n,
            num_graph_arcs: m,
        }
    }

    pub fn len(&self) -> usize {
        self.dst.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dst.is_empty()
    }
}

/// Attention coefficients of one layer, detached from the tape.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionWeights {
    /// `(graph arcs + self-loops) x heads`; each column sums to 1 per
    /// receiving node.
    pub per_head: Matrix,
    pub num_graph_arcs: usize,
}

impl AttentionWeights {
    /// Head-averaged weight of every graph arc (self-loops excluded).
    pub fn edge_weights(&self) -> Vec<f64> {
        (0..self.num_graph_arcs)
            .map(|k| {
                let r = self.per_head.row(k);
                r.iter().sum::<f64>() / r.len() as f64
            })
            .collect()
    }
}

/// Encoder output: node representations on the tape plus the final layer's
/// attention.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub hidden: Var,
    pub attention: AttentionWeights,
}

fn check_rows(tape: &Tape, x: Var, arcs: &AttentionArcs, op: &'static str) -> Result<(), TensorError> {
    let rows = tape.value(x).rows();
    if rows != arcs.num_nodes {
        return Err(ShapeError::new(op, format!("{rows} rows for {} nodes", arcs.num_nodes)).into());
    }
    Ok(())
}

/// One attention layer. Arc logits are
/// `LeakyReLU(a_dst·Wh_i + a_src·Wh_j)`, normalised over the arcs entering
/// `i` (including its self-loop), and used to weight the messages `Wh_j`.
pub fn gat_layer(
    tape: &mut Tape,
    layer: &GatLayerParams<Var>,
    x: Var,
    arcs: &AttentionArcs,
) -> Result<(Var, Var), TensorError> {
    check_rows(tape, x, arcs, "gat_layer")?;
    let n = arcs.num_nodes;
    let wh = tape.matmul(x, layer.weight)?;
    let score_dst = tape.head_dot(wh, layer.attn_dst)?;
    let score_src = tape.head_dot(wh, layer.attn_src)?;
    let arc_dst = tape.gather_rows(score_dst, &arcs.dst)?;
    let arc_src = tape.gather_rows(score_src, &arcs.src)?;
    let logits = tape.add(arc_dst, arc_src)?;
    let logits = tape.leaky_relu(logits, layer.leaky_slope)?;
    let alpha = tape.segment_softmax(logits, &arcs.dst, n)?;
    let messages = tape.gather_rows(wh, &arcs.src)?;
    let messages = tape.head_scale(messages, alpha)?;
    let mut out = tape.scatter_add_rows(messages, &arcs.dst, n)?;
    if !layer.concat_heads {
        out = tape.head_mean(out, layer.heads)?;
    }
    let out = tape.add(out, layer.bias)?;
    Ok((out, alpha))
}

/// Stacked attention layers with ELU after each. Returns the final layer's
/// attention, detached.
pub fn encode(
    tape: &mut Tape,
    params: &ModelParams<Var>,
    x: Var,
    arcs: &AttentionArcs,
) -> Result<Encoded, TensorError> {
    let mut h = x;
    let mut alpha = None;
    for layer in &params.encoder_layers {
        let (out, a) = gat_layer(tape, layer, h, arcs)?;
        h = tape.elu(out)?;
        alpha = Some(a);
    }
    let alpha = alpha.expect("encoder has at least one layer");
    Ok(Encoded {
        hidden: h,
        attention: AttentionWeights {
            per_head: tape.value(alpha).clone(),
            num_graph_arcs: arcs.num_graph_arcs,
        },
    })
}

/// Linear re-embedding applied to the masked encoder output.
pub fn bridge(tape: &mut Tape, params: &ModelParams<Var>, h: Var) -> Result<Var, TensorError> {
    tape.matmul(h, params.enc_dec_bridge)
}

/// Single attention layer from hidden space back to feature space.
pub fn decode(
    tape: &mut Tape,
    params: &ModelParams<Var>,
    h: Var,
    arcs: &AttentionArcs,
) -> Result<Var, TensorError> {
    Ok(gat_layer(tape, &params.decoder_layer, h, arcs)?.0)
}

/// Two-layer MLP with ELU in between.
pub fn project(tape: &mut Tape, projector: &Projector<Var>, h: Var) -> Result<Var, TensorError> {
    let a = tape.matmul(h, projector.w1)?;
    let a = tape.add(a, projector.b1)?;
    let a = tape.elu(a)?;
    let z = tape.matmul(a, projector.w2)?;
    tape.add(z, projector.b2)
}

/// Representations of the unmasked graph, for downstream evaluation.
pub fn embed(params: &ModelParams, g: &Graph, x: &Matrix) -> Result<Matrix, TensorError> {
    let arcs = AttentionArcs::new(g);
    let mut tape = Tape::new();
    let bound = params.map(|m| tape.constant(m.clone()));
    let xv = tape.constant(x.clone());
    let enc = encode(&mut tape, &bound, xv, &arcs)?;
    Ok(tape.value(enc.hidden).clone())
}
