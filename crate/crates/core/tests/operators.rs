mod common;

use common::{dense_adjacency, dense_matmul, random_graph, rng};
use dgmae::graph::{
    edge_homophily, laplacian_discrepancy, local_feature_homophily, sym_norm_adjacency_apply,
};
use dgmae::{Graph, LabelVector, Matrix};
use proptest::prelude::*;
use rand::Rng;

fn dense_sym_norm(g: &Graph) -> Vec<Vec<f64>> {
    let a = dense_adjacency(g);
    let deg: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if a[i][j] != 0.0 {
                out[i][j] = a[i][j] / (deg[i] * deg[j]).sqrt();
            }
        }
    }
    out
}

#[test]
fn operators_match_dense_oracle_on_random_graphs() {
    let mut r = rng(11);
    for trial in 0..50 {
        let n = r.random_range(1..=64);
        let p = r.random_range(0.0..0.3);
        let g = random_graph(n, p, &mut r);
        let x = Matrix::randn(n, r.random_range(1..6), &mut r);
        let a_norm = dense_sym_norm(&g);
        let smoothed = dense_matmul(&a_norm, &x);
        let mut lap = x.clone();
        for i in 0..n {
            // Isolated nodes have no smoothing term, so L X keeps x_i.
            for c in 0..x.cols() {
                lap.row_mut(i)[c] -= smoothed[(i, c)];
            }
        }
        let got_s = sym_norm_adjacency_apply(&g, &x).unwrap();
        let got_l = laplacian_discrepancy(&g, &x).unwrap();
        assert!(got_s.max_abs_diff(&smoothed) <= 1e-9, "trial {trial}");
        assert!(got_l.max_abs_diff(&lap) <= 1e-9, "trial {trial}");

        let mut sum = got_s.clone();
        sum.add_assign(&got_l).unwrap();
        assert!(sum.max_abs_diff(&x) <= 1e-12, "trial {trial}");
    }
}

#[test]
fn isolated_nodes_keep_their_features() {
    let g = Graph::from_edges(4, &[(0, 1)]).unwrap();
    let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0], [7.0, 8.0]]);
    let l = laplacian_discrepancy(&g, &x).unwrap();
    assert_eq!(l.row(2), x.row(2));
    assert_eq!(l.row(3), x.row(3));
}

#[test]
fn mismatched_rows_are_rejected() {
    let g = Graph::from_edges(3, &[(0, 1)]).unwrap();
    assert!(sym_norm_adjacency_apply(&g, &Matrix::zeros(2, 1)).is_err());
    let mut x = Matrix::zeros(3, 1);
    x.row_mut(1)[0] = f64::NAN;
    assert!(laplacian_discrepancy(&g, &x).is_err());
}

fn permute(g: &Graph, x: &Matrix, y: &[usize], perm: &[usize]) -> (Graph, Matrix, Vec<usize>) {
    let edges: Vec<_> = g
        .edges()
        .into_iter()
        .map(|(u, v)| (perm[u], perm[v]))
        .collect();
    let n = g.num_nodes();
    let mut px = Matrix::zeros(n, x.cols());
    let mut py = vec![0; n];
    for i in 0..n {
        px.row_mut(perm[i]).copy_from_slice(x.row(i));
        py[perm[i]] = y[i];
    }
    (Graph::from_edges(n, &edges).unwrap(), px, py)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn homophily_is_permutation_invariant(seed in any::<u64>(), n in 2usize..40) {
        let mut r = rng(seed);
        let g = random_graph(n, 0.3, &mut r);
        prop_assume!(g.num_edges() > 0);
        let x = Matrix::randn(n, 3, &mut r);
        let y: Vec<usize> = (0..n).map(|_| r.random_range(0..3)).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut r);
        let (pg, px, py) = permute(&g, &x, &y, &perm);

        let h = edge_homophily(&g, &LabelVector::from_labels(y)).unwrap();
        let ph = edge_homophily(&pg, &LabelVector::from_labels(py)).unwrap();
        prop_assert!((h - ph).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&h));

        let l = local_feature_homophily(&g, &x).unwrap().value;
        let pl = local_feature_homophily(&pg, &px).unwrap().value;
        prop_assert!((l - pl).abs() < 1e-12);
    }

    #[test]
    fn smoothing_is_linear(seed in any::<u64>(), a in -3.0f64..3.0) {
        let mut r = rng(seed);
        let g = random_graph(20, 0.2, &mut r);
        let x = Matrix::randn(20, 2, &mut r);
        let y = Matrix::randn(20, 2, &mut r);
        let combo = x.zip_map(&y, "combo", |p, q| a * p + q).unwrap();
        let lhs = sym_norm_adjacency_apply(&g, &combo).unwrap();
        let sx = sym_norm_adjacency_apply(&g, &x).unwrap();
        let sy = sym_norm_adjacency_apply(&g, &y).unwrap();
        let rhs = sx.zip_map(&sy, "combo", |p, q| a * p + q).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }
}
