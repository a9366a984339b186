//! Partition-comparison metrics: Hungarian-matched accuracy and macro F1,
//! normalised mutual information and the adjusted Rand index.

/// Contingency counts `table[p][t]` between predicted clusters and labels.
fn contingency(pred: &[usize], truth: &[usize]) -> (Vec<Vec<u64>>, usize, usize) {
    assert_eq!(pred.len(), truth.len(), "partitions must cover the same points");
    let kp = pred.iter().max().map_or(0, |m| m + 1);
    let kt = truth.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0u64; kt]; kp];
    for (&p, &t) in pred.iter().zip(truth) {
        table[p][t] += 1;
    }
    (table, kp, kt)
}

/// Minimum-cost perfect assignment on a square cost matrix. Returns
/// `assign[row] = col`.
pub fn hungarian(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // Potentials formulation over 1-based indices; column 0 is a sentinel.
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

/// Resolution of the F1 tie-break in [`best_mapping`].
const F1_QUANTUM: f64 = 1e9;

/// One-to-one cluster-to-label mapping maximising agreement. Among equally
/// good mappings the one with the largest summed per-pair F1 wins, so the
/// macro F1 derived from it does not depend on cluster ids. Clusters left
/// without a label map to `None`.
pub fn best_mapping(pred: &[usize], truth: &[usize]) -> Vec<Option<usize>> {
    let (table, kp, kt) = contingency(pred, truth);
    let size = kp.max(kt);
    let pred_sizes: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let true_sizes: Vec<u64> = (0..kt).map(|t| (0..kp).map(|p| table[p][t]).sum()).collect();
    let max = table.iter().flatten().copied().max().unwrap_or(0) as i64;
    let f1_max = F1_QUANTUM as i64;
    // Secondary costs sum to at most size * f1_max, so one unit of agreement
    // always outweighs them.
    let primary = size as i64 * f1_max + 1;
    let cost: Vec<Vec<i64>> = (0..size)
        .map(|p| {
            (0..size)
                .map(|t| {
                    let count = if p < kp && t < kt { table[p][t] } else { 0 };
                    let f1 = if count == 0 {
                        0
                    } else {
                        let f = 2.0 * count as f64 / (pred_sizes[p] + true_sizes[t]) as f64;
                        (f * F1_QUANTUM).round() as i64
                    };
                    (max - count as i64) * primary + (f1_max - f1)
                })
                .collect()
        })
        .collect();
    let assign = hungarian(&cost);
    (0..kp)
        .map(|p| Some(assign[p]).filter(|&t| t < kt))
        .collect()
}

/// Accuracy after the optimal one-to-one relabelling of clusters.
pub fn clustering_accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    if pred.is_empty() {
        return 0.0;
    }
    let mapping = best_mapping(pred, truth);
    let hits = pred
        .iter()
        .zip(truth)
        .filter(|(&p, &t)| mapping[p] == Some(t))
        .count();
    hits as f64 / pred.len() as f64
}

/// Macro-averaged F1 over the true classes after the same relabelling as
/// [`clustering_accuracy`].
pub fn macro_f1(pred: &[usize], truth: &[usize]) -> f64 {
    let mapping = best_mapping(pred, truth);
    let kt = truth.iter().max().map_or(0, |m| m + 1);
    let mut tp = vec![0usize; kt];
    let mut predicted = vec![0usize; kt];
    let mut actual = vec![0usize; kt];
    for (&p, &t) in pred.iter().zip(truth) {
        actual[t] += 1;
        if let Some(m) = mapping[p] {
            predicted[m] += 1;
            if m == t {
                tp[t] += 1;
            }
        }
    }
    let present: Vec<usize> = (0..kt).filter(|&c| actual[c] > 0).collect();
    if present.is_empty() {
        return 0.0;
    }
    let f1_sum: f64 = present
        .iter()
        .map(|&c| {
            if tp[c] == 0 {
                return 0.0;
            }
            let precision = tp[c] as f64 / predicted[c] as f64;
            let recall = tp[c] as f64 / actual[c] as f64;
            2.0 * precision * recall / (precision + recall)
        })
        .sum();
    f1_sum / present.len() as f64
}

fn entropy(counts: impl Iterator<Item = u64>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information normalised by the arithmetic mean of the two
/// entropies. Two single-cluster partitions score 1.
pub fn nmi(pred: &[usize], truth: &[usize]) -> f64 {
    let (table, kp, kt) = contingency(pred, truth);
    let n = pred.len() as f64;
    if pred.is_empty() {
        return 0.0;
    }
    let rows: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<u64> = (0..kt).map(|t| (0..kp).map(|p| table[p][t]).sum()).collect();
    let hp = entropy(rows.iter().copied(), n);
    let ht = entropy(cols.iter().copied(), n);
    if hp == 0.0 && ht == 0.0 {
        return 1.0;
    }
    let mut mi = 0.0;
    for p in 0..kp {
        for t in 0..kt {
            let c = table[p][t];
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (rows[p] as f64 * cols[t] as f64)).ln();
            }
        }
    }
    (mi / ((hp + ht) / 2.0)).clamp(0.0, 1.0)
}

fn comb2(x: u64) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index.
pub fn ari(pred: &[usize], truth: &[usize]) -> f64 {
    let (table, kp, kt) = contingency(pred, truth);
    let n = pred.len() as u64;
    let index: f64 = table.iter().flatten().map(|&c| comb2(c)).sum();
    let rows: f64 = table.iter().map(|r| comb2(r.iter().sum())).sum();
    let cols: f64 = (0..kt)
        .map(|t| comb2((0..kp).map(|p| table[p][t]).sum()))
        .sum();
    let total = comb2(n);
    if total == 0.0 {
        return 1.0;
    }
    let expected = rows * cols / total;
    let max = (rows + cols) / 2.0;
    if max == expected {
        // Both partitions trivial (all singletons or one block).
        return 1.0;
    }
    (index - expected) / (max - expected)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hungarian_small_case() {
        let cost = vec![vec![4, 1, 3], vec![2, 0, 5], vec![3, 2, 2]];
        let a = hungarian(&cost);
        let total: i64 = a.iter().enumerate().map(|(r, &c)| cost[r][c]).sum();
        assert_eq!(total, 5);
    }

    #[test]
    fn perfect_agreement() {
        let y = [0, 0, 1, 1, 2, 2, 2];
        assert_eq!(clustering_accuracy(&y, &y), 1.0);
        assert_eq!(macro_f1(&y, &y), 1.0);
        assert_eq!(nmi(&y, &y), 1.0);
        assert_eq!(ari(&y, &y), 1.0);
    }

    #[test]
    fn permutation_invariance() {
        let y = [0, 0, 1, 1, 2, 2, 2];
        let p = [2, 2, 0, 0, 1, 1, 1];
        assert_eq!(clustering_accuracy(&p, &y), 1.0);
        assert_eq!(macro_f1(&p, &y), 1.0);
        assert!((nmi(&p, &y) - 1.0).abs() < 1e-12);
        assert!((ari(&p, &y) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn known_ari_value() {
        // Classic example: ARI = 0.24242...
        let a = [0, 0, 0, 1, 1, 1];
        let b = [0, 0, 1, 1, 2, 2];
        assert!((ari(&a, &b) - 0.242_424_242_424_242_4).abs() < 1e-12);
        assert!((ari(&a, &b) - ari(&b, &a)).abs() < 1e-15);
    }

    #[test]
    fn known_nmi_value() {
        let a = [0, 0, 1, 1];
        let b = [0, 1, 0, 1];
        assert!(nmi(&a, &b).abs() < 1e-15);
    }

    #[test]
    fn accuracy_with_more_clusters_than_labels() {
        let truth = [0, 0, 1, 1];
        let pred = [0, 1, 2, 2];
        assert_eq!(clustering_accuracy(&pred, &truth), 0.75);
    }
}
