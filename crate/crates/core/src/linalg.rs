//! Dataset container, covariance estimation and Mahalanobis geometry.
//!
//! The covariance is fitted once over every sample. When its Cholesky
//! factorization fails (or is numerically rank deficient) a ridge
//! `eps * tr(cov) / d * I` is added with escalating `eps`, keeping the inverse
//! positive definite so Mahalanobis distance remains a true metric.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense `n x d` sample matrix with optional binary labels (`true` = anomaly).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    n: usize,
    d: usize,
    samples: Vec<T>,
    labels: Option<Vec<bool>>,
    feature_names: Option<Vec<String>>,
}

impl<T: Scalar> Dataset<T> {
    /// Builds a dataset from row vectors, validating shape and finiteness.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        let mut samples = Vec::with_capacity(n * d);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != d {
                return Err(Error::Dimension(format!(
                    "row {i} has {} features, expected {d}",
                    row.len()
                )));
            }
            samples.extend(row);
        }
        Self::from_flat(n, d, samples)
    }

    /// Builds a dataset from a row-major buffer of length `n * d`.
    pub fn from_flat(n: usize, d: usize, samples: Vec<T>) -> Result<Self> {
        if d == 0 {
            return Err(Error::Dimension("dataset needs at least one feature".into()));
        }
        if n < 2 {
            return Err(Error::InsufficientData { needed: 2, got: n });
        }
        if samples.len() != n * d {
            return Err(Error::Length {
                expected: n * d,
                got: samples.len(),
            });
        }
        if let Some(pos) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                index: pos / d,
                value: samples[pos].as_f64(),
            });
        }
        Ok(Self {
            n,
            d,
            samples,
            labels: None,
            feature_names: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<bool>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::Length {
                expected: self.n,
                got: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.d {
            return Err(Error::Length {
                expected: self.d,
                got: names.len(),
            });
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.samples[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> + '_ {
        self.samples.chunks_exact(self.d)
    }

    pub fn as_flat(&self) -> &[T] {
        &self.samples
    }

    pub fn labels(&self) -> Option<&[bool]> {
        self.labels.as_deref()
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Labels or [`Error::MissingLabels`].
    pub fn require_labels(&self) -> Result<&[bool]> {
        self.labels().ok_or(Error::MissingLabels)
    }

    /// Number of samples labelled anomalous (0 when unlabelled).
    pub fn anomaly_count(&self) -> usize {
        self.labels().map_or(0, |l| l.iter().filter(|&&b| b).count())
    }

    /// Reorders rows (and labels) so that row `i` of the result is row `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::Length {
                expected: self.n,
                got: perm.len(),
            });
        }
        let mut samples = Vec::with_capacity(self.samples.len());
        for &p in perm {
            if p >= self.n {
                return Err(Error::Index { index: p, n: self.n });
            }
            samples.extend_from_slice(self.row(p));
        }
        Ok(Self {
            n: self.n,
            d: self.d,
            samples,
            labels: self.labels.as_ref().map(|l| perm.iter().map(|&p| l[p]).collect()),
            feature_names: self.feature_names.clone(),
        })
    }
}

/// Distance used to build neighbourhoods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Mahalanobis,
    Euclidean,
}

/// Ridge escalation applied when the raw covariance is not positive definite.
#[derive(Debug, Clone, PartialEq)]
pub enum RidgePolicy {
    /// Fail with [`Error::DegenerateData`] instead of regularizing.
    Disabled,
    /// Try each relative ridge `eps` in order; the absolute ridge is `eps * tr(cov) / d`.
    Escalating(Vec<f64>),
    /// Always add the relative ridge `eps`, even when the raw covariance is fine.
    Fixed(f64),
}

impl Default for RidgePolicy {
    fn default() -> Self {
        RidgePolicy::Escalating(vec![1e-10, 1e-8, 1e-6, 1e-4])
    }
}

/// Global covariance of a dataset with its (possibly regularized) inverse.
#[derive(Debug, Clone)]
pub struct CovarianceModel<T> {
    d: usize,
    mean: Vec<T>,
    covariance: Vec<T>,
    inverse: Vec<T>,
    /// Inverse of the Cholesky factor of the regularized covariance, lower triangular.
    whitener: Vec<T>,
    ridge_used: T,
}

impl<T: Scalar> CovarianceModel<T> {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    /// Row-major `d x d` sample covariance (denominator `n - 1`), without ridge.
    pub fn covariance(&self) -> &[T] {
        &self.covariance
    }

    /// Row-major `d x d` inverse of `covariance + ridge_used * I`.
    pub fn inverse(&self) -> &[T] {
        &self.inverse
    }

    pub fn ridge_used(&self) -> T {
        self.ridge_used
    }

    /// `covariance + ridge_used * I`.
    pub fn regularized_covariance(&self) -> Vec<T> {
        let mut c = self.covariance.clone();
        for i in 0..self.d {
            c[i * self.d + i] += self.ridge_used;
        }
        c
    }

    /// Maps `x` to whitened coordinates where Mahalanobis distance is Euclidean.
    pub fn whiten(&self, x: &[T], out: &mut [T]) {
        let d = self.d;
        for (r, o) in out.iter_mut().enumerate().take(d) {
            let w = &self.whitener[r * d..r * d + r + 1];
            let mut acc = T::zero();
            for (c, &wc) in w.iter().enumerate() {
                acc += wc * (x[c] - self.mean[c]);
            }
            *o = acc;
        }
    }
}

/// Relative pivot below which a Cholesky column is treated as numerically dependent.
fn pivot_tolerance<T: Scalar>() -> T {
    T::of(1e-7).max(T::epsilon() * T::of(64.0))
}

/// Lower Cholesky factor of `a` (row-major), or `None` if `a` is not safely positive definite.
fn cholesky<T: Scalar>(a: &[T], d: usize) -> Option<Vec<T>> {
    let tol = pivot_tolerance::<T>();
    let mut l = vec![T::zero(); d * d];
    for j in 0..d {
        let mut diag = a[j * d + j];
        for k in 0..j {
            diag -= l[j * d + k] * l[j * d + k];
        }
        // 1 - R^2 of column j against the previous columns.
        let scale = a[j * d + j];
        if !(diag > T::zero()) || !(scale > T::zero()) || diag / scale <= tol {
            return None;
        }
        let pivot = diag.sqrt();
        l[j * d + j] = pivot;
        for i in j + 1..d {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            l[i * d + j] = s / pivot;
        }
    }
    Some(l)
}

/// Inverse of a lower triangular matrix by forward substitution.
fn invert_lower<T: Scalar>(l: &[T], d: usize) -> Vec<T> {
    let mut w = vec![T::zero(); d * d];
    for col in 0..d {
        for r in col..d {
            let mut s = if r == col { T::one() } else { T::zero() };
            for k in col..r {
                s -= l[r * d + k] * w[k * d + col];
            }
            w[r * d + col] = s / l[r * d + r];
        }
    }
    w
}

/// Fits the sample covariance over all rows and inverts it, regularizing per `policy`.
pub fn fit_covariance<T: Scalar>(data: &Dataset<T>, policy: &RidgePolicy) -> Result<CovarianceModel<T>> {
    let (n, d) = (data.n(), data.dim());
    if d == 0 {
        return Err(Error::Dimension("zero features".into()));
    }
    let nf = T::of_usize(n);
    let mut mean = vec![T::zero(); d];
    for row in data.rows() {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= nf;
    }

    let mut cov = vec![T::zero(); d * d];
    let mut centered = vec![T::zero(); d];
    for row in data.rows() {
        for c in 0..d {
            centered[c] = row[c] - mean[c];
        }
        for i in 0..d {
            for j in i..d {
                cov[i * d + j] += centered[i] * centered[j];
            }
        }
    }
    let denom = T::of_usize(n - 1);
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] / denom;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }

    let trace: T = (0..d).map(|i| cov[i * d + i]).sum();
    if !(trace > T::zero()) {
        return Err(Error::DegenerateData(
            "all samples are identical (zero covariance)".into(),
        ));
    }

    let attempt = |ridge: T| {
        let mut a = cov.clone();
        for i in 0..d {
            a[i * d + i] += ridge;
        }
        cholesky(&a, d)
    };

    let base = trace / T::of_usize(d);
    let first = match policy {
        RidgePolicy::Fixed(eps) => T::of(*eps) * base,
        _ => T::zero(),
    };
    let (chol, ridge_used) = match attempt(first) {
        Some(l) => (l, first),
        None => {
            let eps_list: &[f64] = match policy {
                RidgePolicy::Disabled | RidgePolicy::Fixed(_) => &[],
                RidgePolicy::Escalating(list) => list,
            };
            eps_list
                .iter()
                .find_map(|&eps| {
                    let ridge = T::of(eps) * base;
                    attempt(ridge).map(|l| (l, ridge))
                })
                .ok_or_else(|| {
                    Error::DegenerateData(
                        "covariance is singular and no ridge in the policy restores positive definiteness".into(),
                    )
                })?
        }
    };

    let whitener = invert_lower(&chol, d);
    let mut inverse = vec![T::zero(); d * d];
    for i in 0..d {
        for j in i..d {
            let mut s = T::zero();
            for k in j..d {
                s += whitener[k * d + i] * whitener[k * d + j];
            }
            inverse[i * d + j] = s;
            inverse[j * d + i] = s;
        }
    }

    Ok(CovarianceModel {
        d,
        mean,
        covariance: cov,
        inverse,
        whitener,
        ridge_used,
    })
}

/// `sqrt((a - b)^T inv (a - b))` using the model's regularized inverse.
pub fn mahalanobis<T: Scalar>(a: &[T], b: &[T], model: &CovarianceModel<T>) -> Result<T> {
    let d = model.dim();
    if a.len() != d || b.len() != d {
        return Err(Error::Dimension(format!(
            "vectors of length {} and {} for a {d}-dimensional model",
            a.len(),
            b.len()
        )));
    }
    let diff: Vec<T> = a.iter().zip(b).map(|(&x, &y)| x - y).collect();
    let inv = model.inverse();
    let mut q = T::zero();
    for i in 0..d {
        let mut row = T::zero();
        for j in 0..d {
            row += inv[i * d + j] * diff[j];
        }
        q += diff[i] * row;
    }
    Ok(q.max(T::zero()).sqrt())
}

/// Dense symmetric `n x n` distance matrix with an exactly zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix<T> {
    n: usize,
    values: Vec<T>,
}

impl<T: Scalar> DistanceMatrix<T> {
    /// Wraps a row-major buffer, checking shape, symmetry and the zero diagonal.
    pub fn from_flat(n: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::Length {
                expected: n * n,
                got: values.len(),
            });
        }
        for i in 0..n {
            if values[i * n + i] != T::zero() {
                return Err(Error::Dimension(format!("nonzero diagonal at {i}")));
            }
            for j in i + 1..n {
                if values[i * n + j] != values[j * n + i] {
                    return Err(Error::Dimension(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { n, values })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn as_flat(&self) -> &[T] {
        &self.values
    }

    /// Builds the matrix from the strict upper triangle, computed row-parallel, then mirrors it.
    fn from_upper<F>(n: usize, entry: F) -> Self
    where
        F: Fn(usize, usize) -> T + Sync,
    {
        let upper: Vec<Vec<T>> = (0..n)
            .into_par_iter()
            .map(|i| (i + 1..n).map(|j| entry(i, j)).collect())
            .collect();
        let mut values = vec![T::zero(); n * n];
        for (i, row) in upper.into_iter().enumerate() {
            for (off, v) in row.into_iter().enumerate() {
                let j = i + 1 + off;
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Self { n, values }
    }
}

#[inline]
fn euclid<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut s = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        let t = x - y;
        s += t * t;
    }
    s.sqrt()
}

/// All pairwise Mahalanobis distances under `model`.
pub fn pairwise_mahalanobis<T: Scalar>(data: &Dataset<T>, model: &CovarianceModel<T>) -> Result<DistanceMatrix<T>> {
    let d = data.dim();
    if model.dim() != d {
        return Err(Error::Dimension(format!(
            "model fitted on {} features, data has {d}",
            model.dim()
        )));
    }
    let mut white = vec![T::zero(); data.n() * d];
    white
        .par_chunks_mut(d)
        .zip(data.as_flat().par_chunks(d))
        .for_each(|(out, x)| model.whiten(x, out));
    Ok(DistanceMatrix::from_upper(data.n(), |i, j| {
        euclid(&white[i * d..(i + 1) * d], &white[j * d..(j + 1) * d])
    }))
}

/// All pairwise Euclidean distances.
pub fn pairwise_euclidean<T: Scalar>(data: &Dataset<T>) -> DistanceMatrix<T> {
    DistanceMatrix::from_upper(data.n(), |i, j| euclid(data.row(i), data.row(j)))
}

/// Distance matrix under `metric`, fitting the covariance with the default ridge policy when needed.
pub fn distance_matrix<T: Scalar>(data: &Dataset<T>, metric: Metric) -> Result<DistanceMatrix<T>> {
    match metric {
        Metric::Euclidean => Ok(pairwise_euclidean(data)),
        Metric::Mahalanobis => {
            let model = fit_covariance(data, &RidgePolicy::default())?;
            pairwise_mahalanobis(data, &model)
        }
    }
}
