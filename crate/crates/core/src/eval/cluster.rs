//! k-means clustering of embeddings and the clustering report.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::metrics::{ari, clustering_accuracy, macro_f1, nmi};
use crate::error::EvalError;
use crate::graph::LabelVector;
use crate::matrix::Matrix;

const MAX_ITERS: usize = 300;
const TOL: f64 = 1e-6;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Result of one k-means run.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub assignments: Vec<usize>,
    pub centroids: Matrix,
    pub inertia: f64,
    pub iterations: usize,
}

fn nearest(x: &[f64], centroids: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, row) in centroids.row_iter().enumerate() {
        let d = sq_dist(x, row);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init(x: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let n = x.rows();
    let mut centroids = Matrix::zeros(k, x.cols());
    let first = rng.random_range(0..n);
    centroids.row_mut(0).copy_from_slice(x.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), x.row(first))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if r < d {
                    pick = i;
                    break;
                }
                r -= d;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).copy_from_slice(x.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(x.row(i), x.row(pick)));
        }
    }
    centroids
}

/// k-means++ seeding followed by Lloyd iterations until the centroids move
/// less than the tolerance. An emptied cluster is re-seeded with the point
/// farthest from its centroid.
pub fn kmeans(x: &Matrix, k: usize, seed: u64) -> Result<KMeans, EvalError> {
    let n = x.rows();
    if k < 1 {
        return Err(EvalError::TooFewClusters);
    }
    if k > n {
        return Err(EvalError::TooManyClusters { k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(x, k, &mut rng);
    let mut assignments = vec![0; n];
    let mut iterations = 0;
    for it in 1..=MAX_ITERS {
        iterations = it;
        let mut dists = vec![0.0; n];
        for i in 0..n {
            let (c, d) = nearest(x.row(i), &centroids);
            assignments[i] = c;
            dists[i] = d;
        }
        let mut sums = Matrix::zeros(k, x.cols());
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[assignments[i]] += 1;
            for (s, &v) in sums.row_mut(assignments[i]).iter_mut().zip(x.row(i)) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]))
                    .expect("n >= k >= 1");
                sums.row_mut(c).copy_from_slice(x.row(far));
                counts[c] = 1;
                dists[far] = 0.0;
            } else {
                let inv = 1.0 / counts[c] as f64;
                sums.row_mut(c).iter_mut().for_each(|v| *v *= inv);
            }
        }
        let shift = centroids.max_abs_diff(&sums);
        centroids = sums;
        if shift <= TOL {
            break;
        }
    }
    let mut inertia = 0.0;
    for i in 0..n {
        let (c, d) = nearest(x.row(i), &centroids);
        assignments[i] = c;
        inertia += d;
    }
    Ok(KMeans {
        assignments,
        centroids,
        inertia,
        iterations,
    })
}

/// Clustering quality against ground-truth labels.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ClusterReport {
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
    pub f1: f64,
}

impl ClusterReport {
    pub fn compare(pred: &[usize], truth: &[usize]) -> Self {
        Self {
            acc: clustering_accuracy(pred, truth),
            nmi: nmi(pred, truth),
            ari: ari(pred, truth),
            f1: macro_f1(pred, truth),
        }
    }
}

/// Mean and standard deviation of each metric over repeated runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSummary {
    pub runs: Vec<ClusterReport>,
    pub mean: ClusterReport,
    pub std: ClusterReport,
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl ClusterSummary {
    pub fn from_runs(runs: Vec<ClusterReport>) -> Self {
        let stat = |f: fn(&ClusterReport) -> f64| mean_std(&runs.iter().map(f).collect::<Vec<_>>());
        let (acc, nmi, ari, f1) = (stat(|r| r.acc), stat(|r| r.nmi), stat(|r| r.ari), stat(|r| r.f1));
        Self {
            mean: ClusterReport {
                acc: acc.0,
                nmi: nmi.0,
                ari: ari.0,
                f1: f1.0,
            },
            std: ClusterReport {
                acc: acc.1,
                nmi: nmi.1,
                ari: ari.1,
                f1: f1.1,
            },
            runs,
        }
    }
}

/// Runs k-means `runs` times with `k` clusters (seeds derived from `seed`)
/// and scores every run against `y`.
pub fn kmeans_cluster(
    h: &Matrix,
    y: &LabelVector,
    k: usize,
    runs: usize,
    seed: u64,
) -> Result<ClusterSummary, EvalError> {
    if h.rows() != y.len() {
        return Err(crate::error::ShapeError::new(
            "kmeans_cluster",
            format!("{} embeddings for {} labels", h.rows(), y.len()),
        )
        .into());
    }
    if k < 2 {
        return Err(EvalError::TooFewClusters);
    }
    let reports = (0..runs.max(1) as u64)
        .map(|r| {
            let km = kmeans(h, k, seed.wrapping_add(r))?;
            Ok(ClusterReport::compare(&km.assignments, y.as_slice()))
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(ClusterSummary::from_runs(reports))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> (Matrix, Vec<usize>) {
        let centers = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]];
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..60 {
            let c = i % 3;
            let jitter = ((i * 37 % 11) as f64 - 5.0) * 0.1;
            rows.push([centers[c][0] + jitter, centers[c][1] - jitter]);
            labels.push(c);
        }
        (Matrix::from_rows(&rows), labels)
    }

    #[test]
    fn recovers_separated_blobs() {
        let (x, labels) = blobs();
        let km = kmeans(&x, 3, 0).unwrap();
        assert_eq!(clustering_accuracy(&km.assignments, &labels), 1.0);
        let y = LabelVector::from_labels(labels);
        let s = kmeans_cluster(&x, &y, 3, 5, 1).unwrap();
        assert_eq!(s.mean.acc, 1.0);
        assert_eq!(s.std.acc, 0.0);
    }

    #[test]
    fn rejects_too_many_clusters() {
        let x = Matrix::zeros(3, 2);
        assert!(matches!(kmeans(&x, 4, 0), Err(EvalError::TooManyClusters { k: 4, n: 3 })));
    }

    #[test]
    fn identical_points_do_not_break_seeding() {
        let x = Matrix::filled(10, 2, 1.0);
        let km = kmeans(&x, 3, 0).unwrap();
        assert_eq!(km.inertia, 0.0);
    }
}
