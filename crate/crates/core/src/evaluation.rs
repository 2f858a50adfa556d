//! ROC-AUC, top-N confusion colouring, and parameter sweeps over K and h.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{DetectorSpec, ScoringContext};
use crate::error::{Error, Result};
use crate::linalg::Dataset;
use crate::rank::{average_ranks, descending_order};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AucResult {
    pub auc: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    /// Whether any scores were tied and shared an average rank.
    pub tie_adjusted: bool,
}

/// Rank-sum (Mann-Whitney) AUC with average ranks for ties.
///
/// `-inf` scores are accepted and rank below every finite score; NaN is rejected.
pub fn roc_auc<T: Scalar>(scores: &[T], labels: &[bool]) -> Result<AucResult> {
    if scores.len() != labels.len() {
        return Err(Error::Length {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::NonFinite {
            index: i,
            value: f64::NAN,
        });
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass { n_pos, n_neg });
    }
    let ranks = average_ranks(scores);
    let tie_adjusted = {
        let mut sorted = ranks.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.windows(2).any(|w| w[0] == w[1])
    };
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l).map(|(r, _)| r).sum();
    let (p, q) = (n_pos as f64, n_neg as f64);
    let auc = ((rank_sum - p * (p + 1.0) / 2.0) / (p * q)).clamp(0.0, 1.0);
    Ok(AucResult {
        auc,
        n_pos,
        n_neg,
        tie_adjusted,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    /// Normal, kept normal.
    Green,
    /// Anomaly, flagged.
    Yellow,
    /// Normal, flagged.
    Purple,
    /// Anomaly, missed.
    Red,
}

impl Color {
    pub fn name(self) -> &'static str {
        match self {
            Color::Green => "green",
            Color::Yellow => "yellow",
            Color::Purple => "purple",
            Color::Red => "red",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionColoring {
    pub green: usize,
    pub yellow: usize,
    pub purple: usize,
    pub red: usize,
    pub per_sample: Vec<Color>,
    pub top_n: usize,
}

/// Flags the `top_n` highest scores (ties by ascending index) and colours every sample.
pub fn confusion_coloring<T: Scalar>(scores: &[T], labels: &[bool], top_n: usize) -> Result<ConfusionColoring> {
    let n = scores.len();
    if labels.len() != n {
        return Err(Error::Length {
            expected: n,
            got: labels.len(),
        });
    }
    if top_n < 1 || top_n > n {
        return Err(Error::Grid(format!("top_n = {top_n} must lie in 1..={n}")));
    }
    let mut flagged = vec![false; n];
    for &i in descending_order(scores).iter().take(top_n) {
        flagged[i] = true;
    }
    let per_sample: Vec<Color> = flagged
        .iter()
        .zip(labels)
        .map(|(&f, &anomaly)| match (anomaly, f) {
            (false, false) => Color::Green,
            (true, true) => Color::Yellow,
            (false, true) => Color::Purple,
            (true, false) => Color::Red,
        })
        .collect();
    let count = |c| per_sample.iter().filter(|&&x| x == c).count();
    Ok(ConfusionColoring {
        green: count(Color::Green),
        yellow: count(Color::Yellow),
        purple: count(Color::Purple),
        red: count(Color::Red),
        per_sample,
        top_n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub parameter_name: String,
    pub grid: Vec<f64>,
    pub auc_values: Vec<AucResult>,
    pub spread: f64,
}

impl SweepCurve {
    fn new(parameter_name: &str, grid: Vec<f64>, auc_values: Vec<AucResult>) -> Self {
        let aucs = auc_values.iter().map(|a| a.auc);
        let max = aucs.clone().fold(f64::NEG_INFINITY, f64::max);
        let min = aucs.fold(f64::INFINITY, f64::min);
        Self {
            parameter_name: parameter_name.to_string(),
            grid,
            auc_values,
            spread: if max.is_finite() { max - min } else { 0.0 },
        }
    }

    pub fn aucs(&self) -> Vec<f64> {
        self.auc_values.iter().map(|a| a.auc).collect()
    }

    pub fn mean_auc(&self) -> f64 {
        self.auc_values.iter().map(|a| a.auc).sum::<f64>() / self.auc_values.len() as f64
    }
}

fn check_increasing(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Grid("empty grid".into()));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Grid("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// AUC of `detector` for every `k` in `k_grid` at fixed bandwidth.
///
/// The distance matrix and the density are computed once and shared read-only.
pub fn sweep_k<T: Scalar>(data: &Dataset<T>, detector: &DetectorSpec, k_grid: &[usize]) -> Result<SweepCurve> {
    let labels = data.require_labels()?;
    let grid: Vec<f64> = k_grid.iter().map(|&k| k as f64).collect();
    check_increasing(&grid)?;
    let ctx = ScoringContext::new(data);
    let density = ctx.density_for(detector)?;
    if detector.method.uses_k() {
        ctx.distances(detector.distance)?;
    }
    let aucs = k_grid
        .par_iter()
        .map(|&k| {
            let spec = detector.with_k(k);
            let report = ctx.score_with_density(&spec, density.as_ref())?;
            roc_auc(report.ranking(), labels)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepCurve::new("K", grid, aucs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthSearch {
    pub curve: SweepCurve,
    pub best_bandwidth: f64,
    pub best_auc: f64,
}

/// AUC for every bandwidth in `h_grid`; picks the maximizer, ties to the smallest `h`.
///
/// Uses the labels for model selection, so it is a benchmarking tool only.
pub fn grid_search_bandwidth<T: Scalar>(
    data: &Dataset<T>,
    detector: &DetectorSpec,
    h_grid: &[f64],
) -> Result<BandwidthSearch> {
    let labels = data.require_labels()?;
    check_increasing(h_grid)?;
    if let Some(&h) = h_grid.iter().find(|&&h| !(h > 0.0 && h.is_finite())) {
        return Err(Error::Bandwidth(h));
    }
    let ctx = ScoringContext::new(data);
    if detector.method.uses_k() {
        ctx.distances(detector.distance)?;
    }
    let aucs = h_grid
        .par_iter()
        .map(|&h| {
            let report = ctx.score(&detector.with_bandwidth(h))?;
            roc_auc(report.ranking(), labels)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, a) in aucs.iter().enumerate() {
        if a.auc > aucs[best].auc {
            best = i;
        }
    }
    let best_auc = aucs[best].auc;
    Ok(BandwidthSearch {
        best_bandwidth: h_grid[best],
        best_auc,
        curve: SweepCurve::new("h", h_grid.to_vec(), aucs),
    })
}
