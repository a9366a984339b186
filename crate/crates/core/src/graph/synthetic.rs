use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Graph, LabelVector};
use crate::error::GraphError;
use crate::matrix::{FeatureMatrix, Matrix};

/// Parameters of a homophily-controlled random graph with Gaussian-mixture
/// features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n: usize,
    pub classes: usize,
    /// Target edge homophily.
    pub h: f64,
    pub avg_degree: f64,
    pub feature_dim: usize,
    /// Euclidean distance between any two class means.
    pub class_sep: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), GraphError> {
        let bad = |m: String| Err(GraphError::InfeasibleSpec(m));
        if !(0.0..=1.0).contains(&self.h) {
            return bad(format!("h={} outside [0, 1]", self.h));
        }
        if self.classes == 0 || self.n < self.classes {
            return bad(format!("need n >= C >= 1 (n={}, C={})", self.n, self.classes));
        }
        if self.classes == 1 && self.h < 1.0 {
            return bad("a single class cannot produce cross-class edges".into());
        }
        if self.h > 0.0 && self.n < 2 * self.classes {
            return bad("same-class edges need at least two nodes per class".into());
        }
        if !(self.avg_degree > 0.0 && self.avg_degree.is_finite()) {
            return bad(format!("avg_degree={} must be positive", self.avg_degree));
        }
        if !(self.class_sep >= 0.0 && self.class_sep.is_finite()) {
            return bad(format!("class_sep={} must be non-negative", self.class_sep));
        }
        if self.feature_dim < self.classes {
            return bad(format!(
                "feature_dim={} cannot hold {} equidistant class means",
                self.feature_dim, self.classes
            ));
        }
        Ok(())
    }
}

/// Samples a graph, features and labels from `spec`.
///
/// Labels are assigned round-robin. Each of `⌈n·avg_degree/2⌉` attempts picks
/// a uniform endpoint `u` and a partner from the same class with probability
/// `h`, otherwise from another class; self-loops and repeats are skipped.
/// Class means are `class_sep/√2 · e_c`, so every pair of means is
/// `class_sep` apart, and each feature row adds unit Gaussian noise.
pub fn generate_synthetic(
    spec: &SyntheticSpec,
) -> Result<(Graph, FeatureMatrix, LabelVector), GraphError> {
    spec.validate()?;
    let n = spec.n;
    let c = spec.classes;
    let labels: Vec<usize> = (0..n).map(|i| i % c).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let attempts = (n as f64 * spec.avg_degree / 2.0).ceil() as usize;
    let mut seen = HashSet::with_capacity(attempts);
    let mut edges = Vec::with_capacity(attempts);
    for _ in 0..attempts {
        let u = rng.random_range(0..n);
        let same = rng.random_bool(spec.h);
        let v = if same {
            // Class members are u mod c, u mod c + c, ...
            let class = labels[u];
            let size = (n - class).div_ceil(c);
            class + c * rng.random_range(0..size)
        } else {
            loop {
                let v = rng.random_range(0..n);
                if labels[v] != labels[u] {
                    break v;
                }
            }
        };
        if u == v {
            continue;
        }
        let key = (u.min(v), u.max(v));
        if seen.insert(key) {
            edges.push(key);
        }
    }
    let graph = Graph::from_edges(n, &edges)?;

    let d = spec.feature_dim;
    let scale = spec.class_sep / std::f64::consts::SQRT_2;
    let mut x = Matrix::randn(n, d, &mut rng);
    for (i, &label) in labels.iter().enumerate() {
        x[(i, label)] += scale;
    }
    Ok((graph, x, LabelVector::new(labels, c)?))
}
