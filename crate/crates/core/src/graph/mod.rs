//! Undirected graphs in compressed adjacency form, degree-normalised
//! operators, homophily metrics, synthetic generation and file I/O.

mod io;
mod ops;
mod synthetic;

pub use io::{load_graph, read_graph, save_graph, write_graph, Dataset};
pub use ops::{
    edge_homophily, laplacian_discrepancy, local_feature_homophily, sym_norm_adjacency_apply,
    LocalHomophily,
};
pub use synthetic::{generate_synthetic, SyntheticSpec};

use crate::error::GraphError;

/// Immutable undirected simple graph. Both directions of every edge are
/// materialised; neighbour lists are sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
}

impl Graph {
    /// Builds a graph from undirected edges, in either orientation.
    ///
    /// Self-loops, duplicates (in either orientation) and out-of-range
    /// endpoints are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(GraphError::IndexOutOfRange { index: x, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::with_capacity(2 * edges.len());
        offsets.push(0);
        for (u, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(GraphError::DuplicateEdge(u.min(w[0]), u.max(w[0])));
            }
            neighbors.extend_from_slice(list);
            offsets.push(neighbors.len());
        }
        Ok(Self { offsets, neighbors })
    }

    /// `n` isolated nodes.
    pub fn empty(n: usize) -> Self {
        Self {
            offsets: vec![0; n + 1],
            neighbors: Vec::new(),
        }
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges.
    #[inline]
    pub fn num_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    /// Number of directed arcs (twice the edge count).
    #[inline]
    pub fn num_arcs(&self) -> usize {
        self.neighbors.len()
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Range of arc ids whose aggregating endpoint is `i`.
    #[inline]
    pub fn arc_range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    /// Directed arcs `(i, j)` for every `j ∈ N(i)`, in arc-id order.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes()).flat_map(move |i| self.neighbors(i).iter().map(move |&j| (i, j)))
    }

    /// Undirected edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.arcs().filter(|&(u, v)| u < v).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.num_nodes() && self.neighbors(u).binary_search(&v).is_ok()
    }
}

/// Per-node class labels in `[0, classes)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    labels: Vec<usize>,
    classes: usize,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>, classes: usize) -> Result<Self, GraphError> {
        if let Some((node, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= classes) {
            return Err(GraphError::LabelOutOfRange {
                node,
                label,
                classes,
            });
        }
        Ok(Self { labels, classes })
    }

    /// Class count inferred as `max + 1`.
    pub fn from_labels(labels: Vec<usize>) -> Self {
        let classes = labels.iter().max().map_or(0, |m| m + 1);
        Self { labels, classes }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn classes(&self) -> usize {
        self.classes
    }

    #[inline]
    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<(), GraphError> {
        if self.labels.len() != n {
            return Err(GraphError::LabelLength {
                got: self.labels.len(),
                n,
            });
        }
        Ok(())
    }
}
