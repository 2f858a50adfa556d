//! Rank helpers shared by density ranking, AUC and score tables.

use crate::scalar::{cmp_scalar, Scalar};

/// 1-based ascending ranks; tied values share the mean of their positions.
pub fn average_ranks<T: Scalar>(values: &[T]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cmp_scalar(values[a], values[b]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        start = end;
    }
    ranks
}

/// Sample indices from most to least anomalous: descending score, ties by ascending index.
pub fn descending_order<T: Scalar>(scores: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| cmp_scalar(scores[b], scores[a]).then(a.cmp(&b)));
    order
}

/// Ordinal rank per sample under [`descending_order`] (1 = most anomalous).
pub fn descending_ranks<T: Scalar>(scores: &[T]) -> Vec<usize> {
    let mut ranks = vec![0; scores.len()];
    for (pos, idx) in descending_order(scores).into_iter().enumerate() {
        ranks[idx] = pos + 1;
    }
    ranks
}
