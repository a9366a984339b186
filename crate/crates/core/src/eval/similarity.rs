//! Cosine similarity of embeddings across edges, split by whether the two
//! endpoints share a label.

use std::io::Write;

use crate::graph::{Graph, LabelVector};
use crate::loss::COSINE_EPS;
use crate::matrix::{cosine, Matrix};

pub const NUM_BINS: usize = 50;
const BIN_WIDTH: f64 = 2.0 / NUM_BINS as f64;

/// Edge-cosine histograms over `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityHistogram {
    pub homo_counts: Vec<usize>,
    pub hetero_counts: Vec<usize>,
    /// Mean cosine over same-label edges; NaN when there are none.
    pub homo_mean: f64,
    /// Mean cosine over cross-label edges; NaN when there are none.
    pub hetero_mean: f64,
}

/// Bin index of a cosine value; 1.0 falls in the last bin.
pub fn bin_of(c: f64) -> usize {
    let b = ((c + 1.0) / BIN_WIDTH).floor();
    (b.max(0.0) as usize).min(NUM_BINS - 1)
}

fn mean(sum: f64, count: usize) -> f64 {
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

/// Histograms every undirected edge once.
pub fn pairwise_similarity_histogram(h: &Matrix, g: &Graph, y: &LabelVector) -> SimilarityHistogram {
    assert_eq!(h.rows(), g.num_nodes(), "one embedding per node");
    assert_eq!(y.len(), g.num_nodes(), "one label per node");
    let mut homo_counts = vec![0; NUM_BINS];
    let mut hetero_counts = vec![0; NUM_BINS];
    let (mut homo_sum, mut hetero_sum) = (0.0, 0.0);
    for (u, v) in g.edges() {
        let c = cosine(h.row(u), h.row(v), COSINE_EPS).clamp(-1.0, 1.0);
        if y.get(u) == y.get(v) {
            homo_counts[bin_of(c)] += 1;
            homo_sum += c;
        } else {
            hetero_counts[bin_of(c)] += 1;
            hetero_sum += c;
        }
    }
    let homo_n = homo_counts.iter().sum();
    let hetero_n = hetero_counts.iter().sum();
    SimilarityHistogram {
        homo_mean: mean(homo_sum, homo_n),
        hetero_mean: mean(hetero_sum, hetero_n),
        homo_counts,
        hetero_counts,
    }
}

impl SimilarityHistogram {
    pub fn total(&self) -> usize {
        self.homo_counts.iter().chain(&self.hetero_counts).sum()
    }

    /// `bin_lo,bin_hi,homo_count,hetero_count`, one row per bin.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "bin_lo,bin_hi,homo_count,hetero_count")?;
        for b in 0..NUM_BINS {
            let lo = -1.0 + b as f64 * BIN_WIDTH;
            let hi = -1.0 + (b + 1) as f64 * BIN_WIDTH;
            writeln!(
                w,
                "{lo:.2},{hi:.2},{},{}",
                self.homo_counts[b], self.hetero_counts[b]
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bin_edges() {
        assert_eq!(bin_of(-1.0), 0);
        assert_eq!(bin_of(1.0), NUM_BINS - 1);
        assert_eq!(bin_of(0.0), 25);
        assert_eq!(bin_of(-0.01), 24);
    }

    #[test]
    fn csv_has_header_and_fifty_rows() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let h = Matrix::from_rows(&[[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let y = LabelVector::from_labels(vec![0, 0, 1]);
        let s = pairwise_similarity_histogram(&h, &g, &y);
        assert_eq!(s.homo_counts[NUM_BINS - 1], 1);
        assert_eq!(s.hetero_counts[25], 1);
        assert_eq!((s.homo_mean, s.hetero_mean), (1.0, 0.0));
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), NUM_BINS + 1);
        assert!(text.contains("\n-1.00,-0.96,0,0\n"));
    }
}
