use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{Tape, Var};
use crate::error::TensorError;
use crate::graph::Graph;
use crate::matrix::{FeatureMatrix, Matrix};

/// Per-arc selection `m_ij` of neighbour pairs whose feature discrepancy is
/// reconstructed. Indexed like [`Graph::arcs`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSelectionMask {
    pub m: Vec<bool>,
    pub seed: u64,
}

impl EdgeSelectionMask {
    pub fn all(num_arcs: usize) -> Self {
        Self {
            m: vec![true; num_arcs],
            seed: 0,
        }
    }

    pub fn none(num_arcs: usize) -> Self {
        Self {
            m: vec![false; num_arcs],
            seed: 0,
        }
    }

    pub fn selected_count(&self) -> usize {
        self.m.iter().filter(|&&s| s).count()
    }
}

/// Selection probability `min((1 − w)·p_c, p_τ)`.
#[inline]
pub fn selection_probability(w: f64, p_c: f64, p_tau: f64) -> f64 {
    ((1.0 - w) * p_c).min(p_tau)
}

/// Samples `m_ij ~ Bernoulli(min((1 − w_ij)·p_c, p_τ))` independently for
/// every arc. Low attention means a likely-dissimilar pair and a higher
/// chance of selection.
pub fn select_discrepancy_edges(
    attention: &[f64],
    p_c: f64,
    p_tau: f64,
    seed: u64,
) -> EdgeSelectionMask {
    assert!((0.0..=1.0).contains(&p_c), "p_c {p_c} outside [0, 1]");
    assert!(p_tau > 0.0 && p_tau <= 1.0, "p_tau {p_tau} outside (0, 1]");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = attention
        .iter()
        .map(|&w| rng.random::<f64>() < selection_probability(w, p_c, p_tau))
        .collect();
    EdgeSelectionMask { m, seed }
}

/// `x_i^D = Σ_{j∈N(i)} m_ij/√(d_i d_j) · (x_i − x_j)` with the degrees of
/// the full graph. `x` is expected to be row-normalised already.
pub fn masked_discrepancy_target(
    x: &FeatureMatrix,
    g: &Graph,
    selection: &EdgeSelectionMask,
) -> FeatureMatrix {
    assert_eq!(x.rows(), g.num_nodes(), "feature rows must match node count");
    assert_eq!(selection.m.len(), g.num_arcs(), "selection must cover every arc");
    let inv_sqrt: Vec<f64> = g
        .degrees()
        .into_iter()
        .map(|d| if d == 0 { 0.0 } else { 1.0 / (d as f64).sqrt() })
        .collect();
    let mut out = Matrix::zeros(x.rows(), x.cols());
    for i in 0..g.num_nodes() {
        let range = g.arc_range(i);
        let nbrs = g.neighbors(i);
        for (k, &j) in range.zip(nbrs) {
            if !selection.m[k] {
                continue;
            }
            let w = inv_sqrt[i] * inv_sqrt[j];
            let (xi, xj) = (x.row(i), x.row(j));
            for ((o, &a), &b) in out.row_mut(i).iter_mut().zip(xi).zip(xj) {
                *o += w * (a - b);
            }
        }
    }
    out
}

/// `Z^D = Z − Ẑ`, kept on the tape so both branches receive gradients.
pub fn embedding_discrepancy(tape: &mut Tape, z: Var, z_hat: Var) -> Result<Var, TensorError> {
    tape.sub(z, z_hat)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probability_examples() {
        assert_eq!(selection_probability(1.0, 0.3, 0.7), 0.0);
        assert!((selection_probability(0.0, 0.3, 0.7) - 0.3).abs() < 1e-15);
        assert_eq!(selection_probability(0.0, 0.9, 0.7), 0.7);
    }

    #[test]
    fn full_attention_is_never_selected() {
        for seed in 0..20 {
            let s = select_discrepancy_edges(&[1.0; 50], 1.0, 1.0, seed);
            assert_eq!(s.selected_count(), 0);
        }
    }

    #[test]
    fn selection_extremes_hold_for_every_seed() {
        let w: Vec<f64> = (0..40).map(|k| k as f64 / 40.0).collect();
        for seed in 0..20 {
            assert_eq!(select_discrepancy_edges(&w, 0.0, 0.5, seed).selected_count(), 0);
            assert_eq!(select_discrepancy_edges(&[0.0; 40], 1.0, 1.0, seed).selected_count(), 40);
        }
    }

    #[test]
    fn pair_example() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let x = Matrix::from_rows(&[[1.0], [-1.0]]);
        let t = masked_discrepancy_target(&x, &g, &EdgeSelectionMask::all(2));
        assert_eq!(t, Matrix::from_rows(&[[2.0], [-2.0]]));
        let t = masked_discrepancy_target(&x, &g, &EdgeSelectionMask::none(2));
        assert_eq!(t, Matrix::zeros(2, 1));
    }
}
