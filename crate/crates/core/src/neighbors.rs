//! K-nearest-neighbour selection over a dense distance matrix.
//!
//! Candidates are ordered by `(distance, index)`, so ties at the boundary go
//! to the lower sample index and the table is fully deterministic.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::DistanceMatrix;
use crate::scalar::{cmp_scalar, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborTable<T> {
    k: usize,
    n: usize,
    indices: Vec<usize>,
    distances: Vec<T>,
    tie_events: usize,
}

impl<T: Scalar> NeighborTable<T> {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Neighbour indices of sample `i`, nearest first.
    pub fn indices(&self, i: usize) -> &[usize] {
        &self.indices[i * self.k..(i + 1) * self.k]
    }

    pub fn distances(&self, i: usize) -> &[T] {
        &self.distances[i * self.k..(i + 1) * self.k]
    }

    /// Rows where the k-th and (k+1)-th candidate distances were equal.
    pub fn tie_events(&self) -> usize {
        self.tie_events
    }
}

pub(crate) fn check_k(k: usize, n: usize) -> Result<()> {
    if k < 1 {
        Err(Error::KInvalid)
    } else if k >= n {
        Err(Error::KTooLarge { k, n })
    } else {
        Ok(())
    }
}

/// Selects the `k` nearest other samples for every row of `dist`.
pub fn select_neighbors<T: Scalar>(dist: &DistanceMatrix<T>, k: usize) -> Result<NeighborTable<T>> {
    let n = dist.n();
    check_k(k, n)?;

    let rows: Vec<(Vec<usize>, bool)> = (0..n)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(n - 1),
            |cand: &mut Vec<usize>, i| {
                let row = dist.row(i);
                let by_dist = |a: &usize, b: &usize| -> Ordering { cmp_scalar(row[*a], row[*b]).then(a.cmp(b)) };
                cand.clear();
                cand.extend((0..n).filter(|&j| j != i));
                if k < cand.len() {
                    cand.select_nth_unstable_by(k - 1, by_dist);
                }
                let (head, tail) = cand.split_at_mut(k);
                head.sort_unstable_by(by_dist);
                let kth = row[head[k - 1]];
                let tie = tail.iter().any(|&j| row[j] == kth);
                (head.to_vec(), tie)
            },
        )
        .collect();

    let mut indices = Vec::with_capacity(n * k);
    let mut distances = Vec::with_capacity(n * k);
    let mut tie_events = 0;
    for (i, (row_idx, tie)) in rows.into_iter().enumerate() {
        distances.extend(row_idx.iter().map(|&j| dist.get(i, j)));
        indices.extend(row_idx);
        tie_events += usize::from(tie);
    }
    Ok(NeighborTable {
        k,
        n,
        indices,
        distances,
        tie_events,
    })
}
