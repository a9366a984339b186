//! Downstream evaluation of frozen embeddings.

mod cluster;
pub mod metrics;
mod probe;
mod similarity;
mod split;

use std::io::Write;

pub use cluster::{kmeans, kmeans_cluster, mean_std, ClusterReport, ClusterSummary, KMeans};
pub use probe::{fit_logistic, linear_probe, LogisticModel, ProbeResult, DEFAULT_ITERS, DEFAULT_L2};
pub use similarity::{bin_of, pairwise_similarity_histogram, SimilarityHistogram, NUM_BINS};
pub use split::Split;

/// Writes `metric,value,std` rows.
pub fn write_metrics_csv<W: Write>(mut w: W, rows: &[(&str, f64, f64)]) -> std::io::Result<()> {
    writeln!(w, "metric,value,std")?;
    for (name, value, std) in rows {
        writeln!(w, "{name},{value:?},{std:?}")?;
    }
    Ok(())
}

impl ClusterSummary {
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        write_metrics_csv(
            w,
            &[
                ("acc", self.mean.acc, self.std.acc),
                ("nmi", self.mean.nmi, self.std.nmi),
                ("ari", self.mean.ari, self.std.ari),
                ("f1", self.mean.f1, self.std.f1),
            ],
        )
    }
}
