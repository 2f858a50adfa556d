//! Brute-force reference implementation used by the integration tests.
//!
//! Written independently of the library: explicit Gauss-Jordan inverse,
//! quadratic-form Mahalanobis distances, full sorts for neighbours, linear
//! density sums and a direct entropy. No log-space tricks, so it is only
//! valid on small, well-scaled inputs.

#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub struct OracleEdr {
    pub density: Vec<f64>,
    pub entropy: Vec<f64>,
    pub edr: Vec<f64>,
    pub neighbors: Vec<Vec<usize>>,
}

pub fn covariance(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = x.len();
    let d = x[0].len();
    let mean: Vec<f64> = (0..d).map(|f| x.iter().map(|r| r[f]).sum::<f64>() / n as f64).collect();
    let mut c = vec![vec![0.0; d]; d];
    for a in 0..d {
        for b in 0..d {
            c[a][b] = x.iter().map(|r| (r[a] - mean[a]) * (r[b] - mean[b])).sum::<f64>() / (n - 1) as f64;
        }
    }
    c
}

/// Gauss-Jordan elimination with partial pivoting.
pub fn invert(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..d).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..d {
        let piv = (col..d)
            .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
            .unwrap();
        a.swap(col, piv);
        let p = a[col][col];
        assert!(p.abs() > 1e-14, "oracle: singular matrix");
        for v in a[col].iter_mut() {
            *v /= p;
        }
        for r in 0..d {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    let pivot_row = a[col].clone();
                    for (v, pv) in a[r].iter_mut().zip(pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
    }
    a.into_iter().map(|r| r[d..].to_vec()).collect()
}

pub fn mahalanobis(a: &[f64], b: &[f64], inv: &[Vec<f64>]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mut q = 0.0;
    for i in 0..diff.len() {
        for j in 0..diff.len() {
            q += diff[i] * inv[i][j] * diff[j];
        }
    }
    q.max(0.0).sqrt()
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `k` nearest other samples by `(distance, index)`.
pub fn knn(dist: &[Vec<f64>], i: usize, k: usize) -> Vec<usize> {
    let mut cand: Vec<usize> = (0..dist.len()).filter(|&j| j != i).collect();
    cand.sort_by(|&a, &b| dist[i][a].total_cmp(&dist[i][b]).then(a.cmp(&b)));
    cand.truncate(k);
    cand
}

/// Leave-one-out Gaussian KDE with the standard `(2 pi)^(-d/2)` constant.
pub fn kde(x: &[Vec<f64>], h: f64) -> Vec<f64> {
    let n = x.len();
    let d = x[0].len() as f64;
    let c = (2.0 * PI).powf(-d / 2.0) / (n as f64 * h.powf(d));
    (0..n)
        .map(|i| {
            let s: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let sq = euclidean(&x[i], &x[j]).powi(2);
                    (-sq / (2.0 * h * h)).exp()
                })
                .sum();
            c * s
        })
        .collect()
}

/// Shannon entropy of `weights / sum(weights)`.
///
/// `ln p_j` is taken as `-ln(1 + rest_j / w_j)` with `rest_j` summed directly,
/// so a dominant member whose `p` rounds to 1 still contributes its tiny term.
pub fn entropy(weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    (0..weights.len())
        .filter(|&j| weights[j] > 0.0)
        .map(|j| {
            let rest: f64 = (0..weights.len()).filter(|&l| l != j).map(|l| weights[l]).sum();
            let ln_p = -(rest / weights[j]).ln_1p();
            -(weights[j] / total) * ln_p
        })
        .sum()
}

/// The full detector: global density, Mahalanobis neighbourhoods, local entropy, ratio.
pub fn edrod(x: &[Vec<f64>], k: usize, h: f64) -> OracleEdr {
    let n = x.len();
    let inv = invert(&covariance(x));
    let dist: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { 0.0 } else { mahalanobis(&x[i], &x[j], &inv) })
                .collect()
        })
        .collect();
    let density = kde(x, h);
    let neighbors: Vec<Vec<usize>> = (0..n).map(|i| knn(&dist, i, k)).collect();
    let entropy: Vec<f64> = (0..n)
        .map(|i| {
            let group: Vec<f64> = std::iter::once(i)
                .chain(neighbors[i].iter().copied())
                .map(|j| density[j])
                .collect();
            entropy(&group)
        })
        .collect();
    let edr = entropy.iter().zip(&density).map(|(e, p)| e / p).collect();
    OracleEdr {
        density,
        entropy,
        edr,
        neighbors,
    }
}

/// Indices sorted by descending score, ties by ascending index.
pub fn descending(scores: &[f64]) -> Vec<usize> {
    let mut o: Vec<usize> = (0..scores.len()).collect();
    o.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    o
}

/// Probability that a random positive outscores a random negative (ties count half).
pub fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if labels[i] && !labels[j] {
                den += 1.0;
                num += if scores[i] > scores[j] {
                    1.0
                } else if scores[i] == scores[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    num / den
}

/// Seeded test RNG.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` rows of `d` standard normal features.
pub fn normal_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
        .collect()
}
