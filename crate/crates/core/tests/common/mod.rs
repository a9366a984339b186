#![allow(dead_code)]

use dgmae::{Graph, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdős–Rényi graph; may contain isolated nodes.
pub fn random_graph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

pub fn dense_adjacency(g: &Graph) -> Vec<Vec<f64>> {
    let n = g.num_nodes();
    let mut a = vec![vec![0.0; n]; n];
    for (u, v) in g.edges() {
        a[u][v] = 1.0;
        a[v][u] = 1.0;
    }
    a
}

pub fn dense_matmul(a: &[Vec<f64>], x: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.len(), x.cols());
    for (i, row) in a.iter().enumerate() {
        for (k, &w) in row.iter().enumerate() {
            for c in 0..x.cols() {
                out.row_mut(i)[c] += w * x[(k, c)];
            }
        }
    }
    out
}

pub fn unit_vector(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let v = Matrix::randn(1, d, rng).row_normalized(1e-12);
    v.row(0).to_vec()
}
