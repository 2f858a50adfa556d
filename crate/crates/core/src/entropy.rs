//! Local entropy of group-normalized densities and the entropy density ratio.
//!
//! A local group is a sample plus its K nearest neighbours. The global
//! densities of the group are normalized to sum to one; the Shannon entropy
//! (nats) of that distribution, divided by the sample's own density, is the
//! anomaly score. All of it is carried in log space: the ranking channel is
//! `ln E - ln rho`.

use rayon::prelude::*;

use crate::density::{DensityVector, KernelSpec};
use crate::error::{Error, Result};
use crate::neighbors::NeighborTable;
use crate::scalar::{log_sum_exp, Scalar};

/// A sample together with its neighbours and their normalized densities.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalGroup<T> {
    pub center: usize,
    /// `members[0]` is the center, then the neighbours nearest first.
    pub members: Vec<usize>,
    pub normalized_density: Vec<T>,
    pub log_normalized_density: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdrReport<T> {
    /// Local entropy per sample, nats, in `[0, ln(K + 1)]`.
    pub entropy: Vec<T>,
    /// `ln E - ln rho`.
    pub log_edr: Vec<T>,
    /// `log_edr` without the global kernel constant (`ln E` minus the log
    /// kernel sum). Differs from `log_edr` by one constant, so it orders the
    /// samples the same way, but it does not depend on how the densities are
    /// scaled at all. This is the ranking channel.
    pub log_edr_relative: Vec<T>,
    /// `exp(log_edr)`; `+inf` where not representable.
    pub edr: Vec<T>,
    pub k: usize,
    pub spec: KernelSpec,
    /// Samples whose entropy vanished and received a `-inf` log score.
    pub zero_entropy: usize,
}

/// Log of the group-normalized densities, exact up to rounding regardless of
/// how far apart the raw log densities are.
///
/// Also returns `ln E` computed without leaving log space.
fn normalize_log<T: Scalar>(log_raw: &[T]) -> (Vec<T>, T) {
    let (imax, &m) =
        log_raw.iter().enumerate().fold(
            (0, &T::neg_infinity()),
            |best, cur| if *cur.1 > *best.1 { cur } else { best },
        );
    let rest: Vec<T> = log_raw
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != imax)
        .map(|(_, &l)| l - m)
        .collect();
    // s = sum of the non-maximal weights relative to the maximum
    let ln_s = log_sum_exp(&rest);
    let s = ln_s.exp();
    let ln1p_s = s.ln_1p();

    let log_p: Vec<T> = log_raw
        .iter()
        .enumerate()
        .map(|(j, &l)| if j == imax { -ln1p_s } else { (l - m) - ln1p_s })
        .collect();

    // E = sum_j p_j * (-ln p_j)  =>  ln E = LSE_j(ln p_j + ln(-ln p_j))
    let terms: Vec<T> = log_p
        .iter()
        .enumerate()
        .map(|(j, &lp)| {
            let ln_neg_lp = if j == imax {
                if s.is_normal() && s > T::epsilon() {
                    ln1p_s.ln()
                } else {
                    // ln(ln(1 + s)) = ln s - s/2 + O(s^2)
                    ln_s - s / T::of(2.0)
                }
            } else {
                (-lp).ln()
            };
            lp + ln_neg_lp
        })
        .collect();
    (log_p, log_sum_exp(&terms))
}

fn group_log_raw<T: Scalar>(density: &DensityVector<T>, table: &NeighborTable<T>, i: usize) -> Vec<T> {
    let lks = density.log_kernel_sums();
    std::iter::once(i)
        .chain(table.indices(i).iter().copied())
        .map(|j| lks[j])
        .collect()
}

fn check_pair<T: Scalar>(density: &DensityVector<T>, table: &NeighborTable<T>) -> Result<()> {
    if density.len() != table.n() {
        return Err(Error::Length {
            expected: table.n(),
            got: density.len(),
        });
    }
    Ok(())
}

/// Normalizes the densities of sample `i`'s local group so they sum to one.
pub fn normalize_group<T: Scalar>(
    density: &DensityVector<T>,
    table: &NeighborTable<T>,
    i: usize,
) -> Result<LocalGroup<T>> {
    check_pair(density, table)?;
    if i >= table.n() {
        return Err(Error::Index { index: i, n: table.n() });
    }
    let (log_p, _) = normalize_log(&group_log_raw(density, table, i));
    let mut members = Vec::with_capacity(table.k() + 1);
    members.push(i);
    members.extend_from_slice(table.indices(i));
    Ok(LocalGroup {
        center: i,
        members,
        normalized_density: log_p.iter().map(|v| v.exp()).collect(),
        log_normalized_density: log_p,
    })
}

/// Shannon entropy (nats) of a group, treating `p ln p` as zero for negligible `p`.
pub fn local_entropy<T: Scalar>(group: &LocalGroup<T>) -> T {
    let floor = T::entropy_floor();
    let e: T = group
        .normalized_density
        .iter()
        .zip(&group.log_normalized_density)
        .filter(|(&p, _)| p >= floor)
        .map(|(&p, &lp)| -p * lp)
        .sum();
    e.max(T::zero()).min(T::of_usize(group.members.len()).ln())
}

/// Entropy density ratio for every sample.
pub fn edr_scores<T: Scalar>(density: &DensityVector<T>, table: &NeighborTable<T>) -> Result<EdrReport<T>> {
    check_pair(density, table)?;
    let n = table.n();
    let max_entropy = T::of_usize(table.k() + 1).ln();
    let ln_max_entropy = max_entropy.ln();
    let lks = density.log_kernel_sums();
    let log_scale = density.log_scale();

    let per_sample: Vec<(T, T)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (_, ln_e) = normalize_log(&group_log_raw(density, table, i));
            let ln_e = ln_e.min(ln_max_entropy);
            let relative = if ln_e == T::neg_infinity() {
                T::neg_infinity()
            } else {
                ln_e - lks[i]
            };
            (ln_e.exp().min(max_entropy), relative)
        })
        .collect();

    let (entropy, log_edr_relative): (Vec<T>, Vec<T>) = per_sample.into_iter().unzip();
    let log_edr: Vec<T> = log_edr_relative.iter().map(|&r| r - log_scale).collect();
    let zero_entropy = log_edr.iter().filter(|v| **v == T::neg_infinity()).count();
    let edr = log_edr.iter().map(|v| v.exp()).collect();
    Ok(EdrReport {
        entropy,
        log_edr,
        log_edr_relative,
        edr,
        k: table.k(),
        spec: *density.spec(),
        zero_entropy,
    })
}
