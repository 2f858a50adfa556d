//! Detector dispatch and the reference detectors: distance-sum KNN, plain KDE
//! and a classical LOF. Every score is "higher = more anomalous".

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{estimate_density, DensityVector, KernelSpec, Normalization};
use crate::entropy::edr_scores;
use crate::error::Result;
use crate::linalg::{distance_matrix, Dataset, DistanceMatrix, Metric};
use crate::neighbors::{check_k, select_neighbors, NeighborTable};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Edrod,
    #[serde(rename = "knn")]
    KnnSum,
    #[serde(rename = "kde")]
    KdeDensity,
    Lof,
}

impl Method {
    /// EDROD selects neighbours by Mahalanobis distance; the baselines use Euclidean.
    pub fn default_metric(self) -> Metric {
        match self {
            Method::Edrod => Metric::Mahalanobis,
            _ => Metric::Euclidean,
        }
    }

    pub fn uses_k(self) -> bool {
        !matches!(self, Method::KdeDensity)
    }

    pub fn uses_bandwidth(self) -> bool {
        matches!(self, Method::Edrod | Method::KdeDensity)
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Edrod => "edrod",
            Method::KnnSum => "knn",
            Method::KdeDensity => "kde",
            Method::Lof => "lof",
        }
    }
}

/// Which detector to run and with what parameters.
///
/// Fields a method does not use keep their defaults (`k = 20`, `bandwidth = 1.0`)
/// and are never read.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    pub method: Method,
    pub k: usize,
    pub bandwidth: f64,
    pub distance: Metric,
    pub normalization: Normalization,
}

impl DetectorSpec {
    pub const DEFAULT_K: usize = 20;
    pub const DEFAULT_BANDWIDTH: f64 = 1.0;

    pub fn new(method: Method) -> Self {
        Self {
            method,
            k: Self::DEFAULT_K,
            bandwidth: Self::DEFAULT_BANDWIDTH,
            distance: method.default_metric(),
            normalization: Normalization::Standard,
        }
    }

    pub fn edrod(k: usize, bandwidth: f64) -> Self {
        Self {
            k,
            bandwidth,
            ..Self::new(Method::Edrod)
        }
    }

    pub fn knn_sum(k: usize) -> Self {
        Self {
            k,
            ..Self::new(Method::KnnSum)
        }
    }

    pub fn kde(bandwidth: f64) -> Self {
        Self {
            bandwidth,
            ..Self::new(Method::KdeDensity)
        }
    }

    pub fn lof(k: usize) -> Self {
        Self {
            k,
            ..Self::new(Method::Lof)
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_bandwidth(mut self, bandwidth: f64) -> Self {
        self.bandwidth = bandwidth;
        self
    }

    pub fn with_distance(mut self, distance: Metric) -> Self {
        self.distance = distance;
        self
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn kernel(&self) -> KernelSpec {
        KernelSpec::gaussian(self.bandwidth).with_normalization(self.normalization)
    }
}

/// Per-sample scores of one detector run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport<T> {
    pub spec: DetectorSpec,
    /// Linear score; may be `+inf` for EDROD when the ratio is not representable.
    pub scores: Vec<T>,
    /// Log score, when the detector has one (EDROD).
    pub log_scores: Option<Vec<T>>,
    /// Scale-free ranking key, when it differs from the log score (EDROD).
    pub rank_key: Option<Vec<T>>,
    /// EDROD samples whose local entropy vanished.
    pub zero_entropy: usize,
}

impl<T: Scalar> ScoreReport<T> {
    /// Channel used for ranking and AUC: the rank key, else the log score, else the score.
    pub fn ranking(&self) -> &[T] {
        self.rank_key
            .as_deref()
            .or(self.log_scores.as_deref())
            .unwrap_or(&self.scores)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Sum of distances to the `k` nearest neighbours.
pub fn knn_sum_from_table<T: Scalar>(table: &NeighborTable<T>) -> Vec<T> {
    (0..table.n())
        .map(|i| table.distances(i).iter().copied().sum())
        .collect()
}

pub fn score_knn_sum<T: Scalar>(data: &Dataset<T>, k: usize, metric: Metric) -> Result<Vec<T>> {
    check_k(k, data.n())?;
    let dist = distance_matrix(data, metric)?;
    Ok(knn_sum_from_table(&select_neighbors(&dist, k)?))
}

/// Negative log density; higher = sparser.
pub fn score_kde<T: Scalar>(data: &Dataset<T>, bandwidth: f64) -> Result<Vec<T>> {
    let dv = estimate_density(data, &KernelSpec::gaussian(bandwidth))?;
    Ok(kde_from_density(&dv))
}

pub fn kde_from_density<T: Scalar>(density: &DensityVector<T>) -> Vec<T> {
    density.log_values().iter().map(|&v| -v).collect()
}

/// Local outlier factor from a neighbour table and its distance matrix.
///
/// Local reachability density is infinite when every reachability distance
/// is zero (the sample sits on at least `k` duplicates). Such samples score
/// exactly 1; for finite samples an infinite neighbour density is replaced by
/// the largest finite one so their scores stay finite.
pub fn lof_from_table<T: Scalar>(dist: &DistanceMatrix<T>, table: &NeighborTable<T>) -> Vec<T> {
    let (n, k) = (table.n(), table.k());
    let kf = T::of_usize(k);
    let k_distance: Vec<T> = (0..n).map(|i| table.distances(i)[k - 1]).collect();
    let lrd: Vec<T> = (0..n)
        .into_par_iter()
        .map(|p| {
            let mut reach = T::zero();
            for &o in table.indices(p) {
                reach += k_distance[o].max(dist.get(p, o));
            }
            let mean = reach / kf;
            if mean > T::zero() {
                T::one() / mean
            } else {
                T::infinity()
            }
        })
        .collect();
    let max_finite = lrd.iter().copied().filter(|v| v.is_finite()).fold(T::zero(), T::max);
    (0..n)
        .into_par_iter()
        .map(|p| {
            if lrd[p].is_infinite() {
                return T::one();
            }
            let mut acc = T::zero();
            for &o in table.indices(p) {
                acc += if lrd[o].is_finite() { lrd[o] } else { max_finite };
            }
            acc / kf / lrd[p]
        })
        .collect()
}

pub fn score_lof<T: Scalar>(data: &Dataset<T>, k: usize, metric: Metric) -> Result<Vec<T>> {
    check_k(k, data.n())?;
    let dist = distance_matrix(data, metric)?;
    let table = select_neighbors(&dist, k)?;
    Ok(lof_from_table(&dist, &table))
}

/// Caches the k-independent pieces (distance matrices) of a dataset so that
/// sweeps over `k` or `h` only redo what depends on the swept parameter.
pub struct ScoringContext<'a, T> {
    data: &'a Dataset<T>,
    mahalanobis: OnceLock<DistanceMatrix<T>>,
    euclidean: OnceLock<DistanceMatrix<T>>,
}

impl<'a, T: Scalar> ScoringContext<'a, T> {
    pub fn new(data: &'a Dataset<T>) -> Self {
        Self {
            data,
            mahalanobis: OnceLock::new(),
            euclidean: OnceLock::new(),
        }
    }

    pub fn data(&self) -> &'a Dataset<T> {
        self.data
    }

    pub fn distances(&self, metric: Metric) -> Result<&DistanceMatrix<T>> {
        let cell = match metric {
            Metric::Mahalanobis => &self.mahalanobis,
            Metric::Euclidean => &self.euclidean,
        };
        if let Some(d) = cell.get() {
            return Ok(d);
        }
        let d = distance_matrix(self.data, metric)?;
        Ok(cell.get_or_init(|| d))
    }

    /// Density needed by `spec`, if any.
    pub fn density_for(&self, spec: &DetectorSpec) -> Result<Option<DensityVector<T>>> {
        if spec.method.uses_bandwidth() {
            Ok(Some(estimate_density(self.data, &spec.kernel())?))
        } else {
            Ok(None)
        }
    }

    pub fn score(&self, spec: &DetectorSpec) -> Result<ScoreReport<T>> {
        let density = self.density_for(spec)?;
        self.score_with_density(spec, density.as_ref())
    }

    /// Scores with a precomputed density (must match `spec`'s kernel when the method uses one).
    pub fn score_with_density(
        &self,
        spec: &DetectorSpec,
        density: Option<&DensityVector<T>>,
    ) -> Result<ScoreReport<T>> {
        let owned;
        let density = match (spec.method.uses_bandwidth(), density) {
            (true, Some(d)) => Some(d),
            (true, None) => {
                owned = estimate_density(self.data, &spec.kernel())?;
                Some(&owned)
            }
            (false, _) => None,
        };
        let report = |scores, log_scores, rank_key, zero_entropy| ScoreReport {
            spec: *spec,
            scores,
            log_scores,
            rank_key,
            zero_entropy,
        };
        match spec.method {
            Method::KdeDensity => {
                let density = density.expect("kde density");
                let key = density.log_kernel_sums().iter().map(|&v| -v).collect();
                Ok(report(kde_from_density(density), None, Some(key), 0))
            }
            Method::Edrod => {
                check_k(spec.k, self.data.n())?;
                let table = select_neighbors(self.distances(spec.distance)?, spec.k)?;
                let edr = edr_scores(density.expect("edrod density"), &table)?;
                Ok(report(
                    edr.edr,
                    Some(edr.log_edr),
                    Some(edr.log_edr_relative),
                    edr.zero_entropy,
                ))
            }
            Method::KnnSum => {
                check_k(spec.k, self.data.n())?;
                let table = select_neighbors(self.distances(spec.distance)?, spec.k)?;
                Ok(report(knn_sum_from_table(&table), None, None, 0))
            }
            Method::Lof => {
                check_k(spec.k, self.data.n())?;
                let dist = self.distances(spec.distance)?;
                let table = select_neighbors(dist, spec.k)?;
                Ok(report(lof_from_table(dist, &table), None, None, 0))
            }
        }
    }
}

/// Runs one detector on `data`.
pub fn score<T: Scalar>(data: &Dataset<T>, spec: &DetectorSpec) -> Result<ScoreReport<T>> {
    ScoringContext::new(data).score(spec)
}
