use log::warn;

use super::{Graph, LabelVector};
use crate::error::{GraphError, ShapeError};
use crate::matrix::{cosine, FeatureMatrix, Matrix};

/// Norm guard for cosine similarities over feature rows.
const COSINE_EPS: f64 = 1e-12;

fn check_rows(g: &Graph, x: &Matrix, op: &'static str) -> Result<(), GraphError> {
    if x.rows() != g.num_nodes() {
        return Err(ShapeError::new(
            op,
            format!("{} feature rows for {} nodes", x.rows(), g.num_nodes()),
        )
        .into());
    }
    if let Some(row) = (0..x.rows()).find(|&i| x.row(i).iter().any(|v| !v.is_finite())) {
        return Err(GraphError::NonFinite { row });
    }
    Ok(())
}

/// `D^{-1/2} A D^{-1/2} X`. Isolated nodes map to zero rows.
pub fn sym_norm_adjacency_apply(g: &Graph, x: &FeatureMatrix) -> Result<FeatureMatrix, GraphError> {
    check_rows(g, x, "sym_norm_adjacency_apply")?;
    let inv_sqrt: Vec<f64> = g
        .degrees()
        .into_iter()
        .map(|d| if d == 0 { 0.0 } else { 1.0 / (d as f64).sqrt() })
        .collect();
    let mut out = Matrix::zeros(x.rows(), x.cols());
    for i in 0..g.num_nodes() {
        let row = out.row_mut(i);
        for &j in g.neighbors(i) {
            let w = inv_sqrt[i] * inv_sqrt[j];
            for (o, &v) in row.iter_mut().zip(x.row(j)) {
                *o += w * v;
            }
        }
    }
    Ok(out)
}

/// High-pass filtered signal `X − ÃX = L_sym X`.
///
/// An isolated node has an empty neighbour sum and keeps its own row.
pub fn laplacian_discrepancy(g: &Graph, x: &FeatureMatrix) -> Result<FeatureMatrix, GraphError> {
    let smoothed = sym_norm_adjacency_apply(g, x)?;
    Ok(x.zip_map(&smoothed, "laplacian_discrepancy", |a, b| a - b)?)
}

/// Fraction of undirected edges joining same-label endpoints.
pub fn edge_homophily(g: &Graph, y: &LabelVector) -> Result<f64, GraphError> {
    y.check_len(g.num_nodes())?;
    if g.num_edges() == 0 {
        return Err(GraphError::EmptyEdgeSet);
    }
    let same = g
        .arcs()
        .filter(|&(u, v)| u < v && y.get(u) == y.get(v))
        .count();
    Ok(same as f64 / g.num_edges() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalHomophily {
    pub value: f64,
    /// Arc terms dropped to zero because an endpoint had a zero-norm row.
    pub zero_norm_terms: usize,
}

/// Mean over nodes of the mean neighbour cosine similarity.
///
/// Degree-0 nodes contribute 0 but still count in the `1/|V|` normaliser.
/// Cosines involving a zero-norm row count as 0 and are tallied in
/// [`LocalHomophily::zero_norm_terms`].
pub fn local_feature_homophily(g: &Graph, x: &FeatureMatrix) -> Result<LocalHomophily, GraphError> {
    check_rows(g, x, "local_feature_homophily")?;
    let n = g.num_nodes();
    if n == 0 {
        return Ok(LocalHomophily {
            value: 0.0,
            zero_norm_terms: 0,
        });
    }
    let norms: Vec<f64> = x.row_iter().map(|r| crate::matrix::dot(r, r).sqrt()).collect();
    let mut zero_norm_terms = 0;
    let mut total = 0.0;
    for i in 0..n {
        let nbrs = g.neighbors(i);
        if nbrs.is_empty() {
            continue;
        }
        let mut acc = 0.0;
        for &j in nbrs {
            if norms[i] < COSINE_EPS || norms[j] < COSINE_EPS {
                zero_norm_terms += 1;
                continue;
            }
            acc += cosine(x.row(i), x.row(j), COSINE_EPS);
        }
        total += acc / nbrs.len() as f64;
    }
    if zero_norm_terms > 0 {
        warn!("local_feature_homophily: {zero_norm_terms} arc terms touch zero-norm rows");
    }
    Ok(LocalHomophily {
        value: total / n as f64,
        zero_norm_terms,
    })
}
