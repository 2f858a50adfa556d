//! Entropy density ratio outlier detection.
//!
//! The detector combines a global Gaussian kernel density estimate with the
//! Shannon entropy of densities inside each sample's Mahalanobis K-nearest
//! neighbourhood. A sample scores high when its neighbourhood is "flat"
//! (high entropy) while its own density is low. Scores are carried in log
//! space so high dimensions and narrow bandwidths do not underflow.
//!
//! The crate also ships the reference detectors (KNN distance sum, plain KDE,
//! LOF), ROC-AUC evaluation, parameter sweeps, synthetic benchmark
//! generators and the `edrod` command-line tool.
//!
//! ```
//! use edrod::{score, Dataset64, DetectorSpec};
//!
//! let mut rows: Vec<Vec<f64>> = (0..30)
//!     .map(|i| vec![(i % 6) as f64 * 0.3, (i / 6) as f64 * 0.3 + 0.05 * (i % 2) as f64])
//!     .collect();
//! rows.push(vec![9.0, -7.0]);
//! let data = Dataset64::from_rows(rows).unwrap();
//! let report = score(&data, &DetectorSpec::edrod(5, 0.5)).unwrap();
//! let top = edrod::rank::descending_order(report.ranking())[0];
//! assert_eq!(top, 30);
//! ```

// `!(x > 0.0)` is used on purpose: it rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod cli;
pub mod data_io;
pub mod density;
pub mod entropy;
pub mod error;
pub mod evaluation;
pub mod linalg;
pub mod neighbors;
pub mod rank;
pub mod scalar;

pub use baselines::{score, DetectorSpec, Method, ScoreReport, ScoringContext};
pub use data_io::{generate, load_csv, save_csv, CsvOptions, LabelColumn, OutputFormat, SyntheticKind, SyntheticSpec};
pub use density::{estimate_density, DensityVector, Kernel, KernelSpec, Normalization};
pub use entropy::{edr_scores, local_entropy, normalize_group, EdrReport, LocalGroup};
pub use error::{Error, Result};
pub use evaluation::{
    confusion_coloring, grid_search_bandwidth, roc_auc, sweep_k, AucResult, BandwidthSearch, Color, ConfusionColoring,
    SweepCurve,
};
pub use linalg::{
    distance_matrix, fit_covariance, mahalanobis, pairwise_euclidean, pairwise_mahalanobis, CovarianceModel, Dataset,
    DistanceMatrix, Metric, RidgePolicy,
};
pub use neighbors::{select_neighbors, NeighborTable};
pub use scalar::Scalar;

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type CovarianceModel64 = CovarianceModel<f64>;
pub type CovarianceModel32 = CovarianceModel<f32>;
pub type DistanceMatrix64 = DistanceMatrix<f64>;
pub type DistanceMatrix32 = DistanceMatrix<f32>;
pub type DensityVector64 = DensityVector<f64>;
pub type DensityVector32 = DensityVector<f32>;
pub type NeighborTable64 = NeighborTable<f64>;
pub type NeighborTable32 = NeighborTable<f32>;
pub type EdrReport64 = EdrReport<f64>;
pub type EdrReport32 = EdrReport<f32>;
pub type ScoreReport64 = ScoreReport<f64>;
pub type ScoreReport32 = ScoreReport<f32>;

/// Crate version embedded in every CLI artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
