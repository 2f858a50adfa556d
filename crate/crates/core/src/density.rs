//! Global Gaussian kernel density estimate for every sample.
//!
//! Densities exclude the self term and are accumulated in log space, so the
//! estimate stays finite in high dimension or at small bandwidth where the
//! linear values underflow. The log channel is authoritative; `values` is
//! `exp(log_values)` and may round to zero.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Dataset;
use crate::rank::average_ranks;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    #[default]
    Gaussian,
}

/// Leading constant of the Gaussian kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// `(2 pi)^(-d)`: the standard factor squared. Shifts every log density by the
    /// same amount, so rankings are unchanged.
    Squared,
    /// `(2 pi)^(-d/2)`, the standard multivariate normal constant.
    #[default]
    Standard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub bandwidth: f64,
    pub kernel: Kernel,
    pub normalization: Normalization,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self::gaussian(1.0)
    }
}

impl KernelSpec {
    pub fn gaussian(bandwidth: f64) -> Self {
        Self {
            bandwidth,
            kernel: Kernel::Gaussian,
            normalization: Normalization::Standard,
        }
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.bandwidth > 0.0 && self.bandwidth.is_finite() {
            Ok(())
        } else {
            Err(Error::Bandwidth(self.bandwidth))
        }
    }

    /// `ln(C / (n h^d))`, the sample-independent part of every log density.
    pub fn log_scale<T: Scalar>(&self, n: usize, d: usize) -> T {
        let two_pi = T::of(std::f64::consts::TAU);
        let df = T::of_usize(d);
        let log_c = match self.normalization {
            Normalization::Squared => -df * two_pi.ln(),
            Normalization::Standard => -df / T::of(2.0) * two_pi.ln(),
        };
        log_c - T::of_usize(n).ln() - df * T::of(self.bandwidth).ln()
    }
}

/// Per-sample density estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityVector<T> {
    /// `ln sum_{j != i} exp(-|x_i - x_j|^2 / (2 h^2))`; free of the normalizing constant.
    log_kernel_sums: Vec<T>,
    log_scale: T,
    log_values: Vec<T>,
    values: Vec<T>,
    spec: KernelSpec,
}

impl<T: Scalar> DensityVector<T> {
    fn assemble(log_kernel_sums: Vec<T>, log_scale: T, spec: KernelSpec) -> Self {
        let log_values: Vec<T> = log_kernel_sums.iter().map(|&s| s + log_scale).collect();
        let values = log_values.iter().map(|v| v.exp()).collect();
        Self {
            log_kernel_sums,
            log_scale,
            log_values,
            values,
            spec,
        }
    }

    pub fn len(&self) -> usize {
        self.log_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn log_values(&self) -> &[T] {
        &self.log_values
    }

    /// Log densities with the common constant removed; differences between
    /// entries equal differences of `log_values`.
    pub fn log_kernel_sums(&self) -> &[T] {
        &self.log_kernel_sums
    }

    pub fn log_scale(&self) -> T {
        self.log_scale
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    /// The same densities multiplied by a positive constant `c`.
    pub fn scaled(&self, c: T) -> Self {
        Self::assemble(self.log_kernel_sums.clone(), self.log_scale + c.ln(), self.spec)
    }

    /// Builds a density vector from raw log densities (constant absorbed into the sums).
    pub fn from_log_values(log_values: Vec<T>, spec: KernelSpec) -> Self {
        Self::assemble(log_values, T::zero(), spec)
    }
}

/// Leave-one-out Gaussian KDE at every sample, Euclidean norm inside the kernel.
pub fn estimate_density<T: Scalar>(data: &Dataset<T>, spec: &KernelSpec) -> Result<DensityVector<T>> {
    spec.validate()?;
    let (n, d) = (data.n(), data.dim());
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let h = T::of(spec.bandwidth);
    let inv_two_h2 = T::one() / (T::of(2.0) * h * h);

    let log_kernel_sums: Vec<T> = (0..n)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(n - 1),
            |exps, i| {
                exps.clear();
                let xi = data.row(i);
                let mut max = T::neg_infinity();
                for j in (0..n).filter(|&j| j != i) {
                    let mut sq = T::zero();
                    for (&a, &b) in xi.iter().zip(data.row(j)) {
                        let t = a - b;
                        sq += t * t;
                    }
                    let e = -sq * inv_two_h2;
                    if e > max {
                        max = e;
                    }
                    exps.push(e);
                }
                let mut acc = T::zero();
                for &e in exps.iter() {
                    acc += (e - max).exp();
                }
                max + acc.ln()
            },
        )
        .collect();

    Ok(DensityVector::assemble(log_kernel_sums, spec.log_scale(n, d), *spec))
}

/// Ascending average ranks of the densities (lowest density gets rank 1).
pub fn density_rank<T: Scalar>(density: &DensityVector<T>) -> Vec<f64> {
    average_ranks(density.log_values())
}
