//! Synthetic benchmark generators and CSV / JSON-lines I/O.
//!
//! Generation uses ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64(seed)`)
//! and consumes the stream in a fixed order: component centers (when not
//! given explicitly), then normal samples component by component, then point
//! anomalies (rejection sampled), then the anomaly cluster. Rows are emitted
//! in that same order: normals first, anomalies last.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::baselines::ScoreReport;
use crate::error::{Error, Result};
use crate::evaluation::{Color, SweepCurve};
use crate::linalg::Dataset;
use crate::rank::descending_ranks;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    /// Planar Gaussian clusters, scattered point anomalies and one anomaly cluster.
    TwoDimMixed,
    /// Gaussian components in `dimension` features with anomalies from a wider uniform box.
    TenDimGaussian,
}

/// Placement parameters. All boxes are axis-aligned and apply to every feature
/// unless given per feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    /// Normal component centers; when empty they are drawn uniformly from `[-center_range, center_range]^d`.
    pub centers: Vec<Vec<f64>>,
    pub center_range: f64,
    /// Relative component sizes.
    pub component_weights: Vec<f64>,
    /// Per-component isotropic standard deviation.
    pub component_std: Vec<f64>,
    /// Point anomalies are uniform in `[low, high]^d` ...
    pub anomaly_range: (f64, f64),
    /// ... rejecting draws within this many standard deviations of a center.
    pub core_exclusion: f64,
    /// Anomaly cluster box, per feature; empty when there is no cluster.
    pub cluster_low: Vec<f64>,
    pub cluster_high: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub n_normal: usize,
    pub n_point_anomalies: usize,
    pub n_cluster_anomalies: usize,
    pub dimension: usize,
    pub seed: u64,
    pub geometry: Geometry,
}

impl SyntheticSpec {
    /// 712 normals in three planar clusters, 100 anomalies scattered over
    /// `[-10, 10]^2` outside two standard deviations of every cluster center,
    /// and a compact 30-point anomaly cluster in `5.5 < x < 7, -5 < y < -3`
    /// (lower right, away from the normal clusters).
    pub fn two_dim_mixed(seed: u64) -> Self {
        Self {
            kind: SyntheticKind::TwoDimMixed,
            n_normal: 712,
            n_point_anomalies: 100,
            n_cluster_anomalies: 30,
            dimension: 2,
            seed,
            geometry: Geometry {
                centers: vec![vec![-4.0, 2.5], vec![1.5, 4.5], vec![0.0, -3.5]],
                center_range: 0.0,
                component_weights: vec![0.4, 0.35, 0.25],
                component_std: vec![1.0, 0.8, 0.9],
                anomaly_range: (-10.0, 10.0),
                core_exclusion: 2.0,
                cluster_low: vec![5.5, -5.0],
                cluster_high: vec![7.0, -3.0],
            },
        }
    }

    /// `n_total` samples in `dimension` features with 10% anomalies
    /// (300 -> 270 + 30, 700 -> 630 + 70). Three components of unequal size
    /// (60/30/10%) with centers drawn from `[-3, 3]^d`; anomalies are uniform
    /// in the broader box `[-4, 4]^d`.
    pub fn ten_dim_gaussian(n_total: usize, dimension: usize, seed: u64) -> Self {
        let n_anom = n_total / 10;
        Self {
            kind: SyntheticKind::TenDimGaussian,
            n_normal: n_total - n_anom,
            n_point_anomalies: n_anom,
            n_cluster_anomalies: 0,
            dimension,
            seed,
            geometry: Geometry {
                centers: Vec::new(),
                center_range: 3.0,
                component_weights: vec![0.6, 0.3, 0.1],
                component_std: vec![0.3, 0.3, 0.3],
                anomaly_range: (-4.0, 4.0),
                core_exclusion: 4.0,
                cluster_low: Vec::new(),
                cluster_high: Vec::new(),
            },
        }
    }

    pub fn total(&self) -> usize {
        self.n_normal + self.n_point_anomalies + self.n_cluster_anomalies
    }

    fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        let d = self.dimension;
        let fail = |m: &str| Err(Error::Spec(m.to_string()));
        if d == 0 {
            return fail("dimension must be at least 1");
        }
        if self.total() < 2 {
            return fail("need at least 2 samples in total");
        }
        let m = g.component_weights.len();
        if self.n_normal > 0 && m == 0 {
            return fail("normal samples need at least one component");
        }
        if g.component_std.len() != m {
            return fail("component_std and component_weights differ in length");
        }
        if g.component_weights.iter().any(|w| !(*w >= 0.0 && w.is_finite()))
            || (m > 0 && g.component_weights.iter().sum::<f64>() <= 0.0)
        {
            return fail("component weights must be non-negative with a positive sum");
        }
        if g.component_std.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return fail("component standard deviations must be positive");
        }
        if !g.centers.is_empty() && (g.centers.len() != m || g.centers.iter().any(|c| c.len() != d)) {
            return fail("explicit centers must match the component count and dimension");
        }
        if g.centers.is_empty() && !(g.center_range >= 0.0 && g.center_range.is_finite()) {
            return fail("center_range must be non-negative");
        }
        if self.n_point_anomalies > 0 && !(g.anomaly_range.0 < g.anomaly_range.1) {
            return fail("anomaly_range must have low < high");
        }
        if self.n_cluster_anomalies > 0 {
            if g.cluster_low.len() != d || g.cluster_high.len() != d {
                return fail("cluster box must have one bound per feature");
            }
            if g.cluster_low.iter().zip(&g.cluster_high).any(|(l, h)| !(l < h)) {
                return fail("cluster box must have low < high in every feature");
            }
        }
        Ok(())
    }
}

/// Splits `total` by `weights` with largest-remainder rounding (ties to the lower index).
fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut left = total - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

const MAX_REJECTIONS: usize = 1_000_000;

/// Draws a labelled dataset from `spec`; identical specs give identical data.
pub fn generate<T: Scalar>(spec: &SyntheticSpec) -> Result<Dataset<T>> {
    spec.validate()?;
    let g = &spec.geometry;
    let d = spec.dimension;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let centers: Vec<Vec<f64>> = if g.centers.is_empty() {
        (0..g.component_weights.len())
            .map(|_| {
                (0..d)
                    .map(|_| {
                        if g.center_range > 0.0 {
                            rng.random_range(-g.center_range..=g.center_range)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect()
    } else {
        g.centers.clone()
    };

    let mut samples: Vec<f64> = Vec::with_capacity(spec.total() * d);
    let mut labels = Vec::with_capacity(spec.total());

    if spec.n_normal > 0 {
        for (c, count) in apportion(spec.n_normal, &g.component_weights).into_iter().enumerate() {
            for _ in 0..count {
                for &mu in &centers[c] {
                    let z: f64 = rng.sample(StandardNormal);
                    samples.push(mu + g.component_std[c] * z);
                }
                labels.push(false);
            }
        }
    }

    let in_cluster_box = |x: &[f64]| {
        !g.cluster_low.is_empty()
            && x.iter()
                .zip(g.cluster_low.iter().zip(&g.cluster_high))
                .all(|(v, (lo, hi))| v >= lo && v <= hi)
    };
    let near_core = |x: &[f64]| {
        centers.iter().zip(&g.component_std).any(|(c, s)| {
            let sq: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
            sq.sqrt() < g.core_exclusion * s
        })
    };
    let mut point = vec![0.0; d];
    for _ in 0..spec.n_point_anomalies {
        let mut tries = 0;
        loop {
            for v in point.iter_mut() {
                *v = rng.random_range(g.anomaly_range.0..g.anomaly_range.1);
            }
            if !near_core(&point) && !in_cluster_box(&point) {
                break;
            }
            tries += 1;
            if tries >= MAX_REJECTIONS {
                return Err(Error::Spec("anomaly box is covered by the excluded regions".into()));
            }
        }
        samples.extend_from_slice(&point);
        labels.push(true);
    }

    for _ in 0..spec.n_cluster_anomalies {
        for f in 0..d {
            samples.push(rng.random_range(g.cluster_low[f]..g.cluster_high[f]));
        }
        labels.push(true);
    }

    let samples = samples.into_iter().map(T::of).collect();
    Dataset::from_flat(spec.total(), d, samples)?.with_labels(labels)
}

/// Which CSV column, if any, holds the labels.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LabelColumn {
    None,
    /// The column named `label` when the file has a header and such a column.
    #[default]
    Auto,
    Name(String),
    Index(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvOptions {
    pub has_header: bool,
    pub label: LabelColumn,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            has_header: true,
            label: LabelColumn::Auto,
        }
    }
}

fn parse_label(raw: &str) -> Option<bool> {
    match raw.trim() {
        "0" | "0.0" => Some(false),
        "1" | "1.0" => Some(true),
        _ => None,
    }
}

/// Reads a dataset from CSV. Lines starting with `#` are ignored.
pub fn load_csv<T: Scalar>(path: &Path, options: &CsvOptions) -> Result<Dataset<T>> {
    let file = File::open(path)?;
    read_csv(file, path, options)
}

/// [`load_csv`] over any reader; `path` is used only in diagnostics.
pub fn read_csv<T: Scalar, R: Read>(reader: R, path: &Path, options: &CsvOptions) -> Result<Dataset<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let column_err = |message: String| Error::Column {
        path: path.to_path_buf(),
        message,
    };

    let header: Option<Vec<String>> = if options.has_header {
        match records.next() {
            Some(r) => Some(r?.iter().map(str::to_string).collect()),
            None => return Err(Error::Empty(path.to_path_buf())),
        }
    } else {
        None
    };

    let label_idx = match (&options.label, &header) {
        (LabelColumn::None, _) => None,
        (LabelColumn::Auto, Some(h)) => h.iter().position(|c| c == "label"),
        (LabelColumn::Auto, None) => None,
        (LabelColumn::Name(name), Some(h)) => Some(
            h.iter()
                .position(|c| c == name)
                .ok_or_else(|| column_err(format!("no column named {name:?}")))?,
        ),
        (LabelColumn::Name(name), None) => {
            return Err(column_err(format!(
                "label column {name:?} given by name but the file has no header"
            )))
        }
        (LabelColumn::Index(i), _) => Some(*i),
    };

    let mut width: Option<usize> = header.as_ref().map(Vec::len);
    let mut samples: Vec<T> = Vec::new();
    let mut labels: Vec<bool> = Vec::new();
    let mut n = 0;
    for rec in records {
        let rec = rec?;
        let row = rec.position().map_or(n + 1, |p| p.line() as usize);
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row,
                column: rec.len(),
                message: format!("expected {w} fields, found {}", rec.len()),
            });
        }
        if let Some(li) = label_idx {
            if li >= w {
                return Err(column_err(format!("label column {li} out of range for {w} columns")));
            }
        }
        for (c, field) in rec.iter().enumerate() {
            if Some(c) == label_idx {
                let l = parse_label(field).ok_or_else(|| Error::Label {
                    path: path.to_path_buf(),
                    row,
                    value: field.to_string(),
                })?;
                labels.push(l);
                continue;
            }
            let parsed = field.parse::<f64>().ok().filter(|v| v.is_finite());
            let v = parsed.ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                row,
                column: c + 1,
                message: format!("{field:?} is not a finite number"),
            })?;
            samples.push(T::of(v));
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::Empty(path.to_path_buf()));
    }
    let d = width.unwrap_or(0) - usize::from(label_idx.is_some());
    let mut data = Dataset::from_flat(n, d, samples)?;
    if label_idx.is_some() {
        data = data.with_labels(labels)?;
    }
    if let Some(h) = header {
        let names = h
            .into_iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != label_idx)
            .map(|(_, s)| s)
            .collect();
        data = data.with_feature_names(names)?;
    }
    Ok(data)
}

/// Writes a dataset as CSV with a header; a `label` column is appended when labels exist.
pub fn write_csv<T: Scalar, W: Write>(data: &Dataset<T>, writer: W, comment: Option<&str>) -> Result<()> {
    let mut out = BufWriter::new(writer);
    if let Some(c) = comment {
        writeln!(out, "# {c}")?;
    }
    let mut wtr = csv::Writer::from_writer(out);
    let mut header: Vec<String> = match data.feature_names() {
        Some(names) => names.to_vec(),
        None => (0..data.dim()).map(|i| format!("x{i}")).collect(),
    };
    if data.labels().is_some() {
        header.push("label".into());
    }
    wtr.write_record(&header)?;
    for (i, row) in data.rows().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        if let Some(l) = data.labels() {
            rec.push(if l[i] { "1" } else { "0" }.into());
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_csv<T: Scalar>(data: &Dataset<T>, path: &Path, comment: Option<&str>) -> Result<()> {
    write_csv(data, File::create(path)?, comment)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Jsonl,
}

/// One line of a score file. Non-finite values are omitted (`null` / empty).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub index: usize,
    pub score: Option<f64>,
    pub log_score: Option<f64>,
    /// 1 = most anomalous; ties broken by ascending index.
    pub rank: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub label: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub color: Option<Color>,
    /// Ranking channel min-max scaled to `[0, 1]` (`-inf` maps to 0); emitted for heatmaps.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub normalized_score: Option<f64>,
}

fn finite<T: Scalar>(v: T) -> Option<f64> {
    Some(v.as_f64()).filter(|x| x.is_finite())
}

pub fn score_rows<T: Scalar>(
    report: &ScoreReport<T>,
    labels: Option<&[bool]>,
    colors: Option<&[Color]>,
) -> Vec<ScoreRow> {
    let ranks = descending_ranks(report.ranking());
    (0..report.len())
        .map(|i| ScoreRow {
            index: i,
            score: finite(report.scores[i]),
            log_score: report.log_scores.as_ref().and_then(|l| finite(l[i])),
            rank: ranks[i],
            label: labels.map(|l| u8::from(l[i])),
            color: colors.map(|c| c[i]),
            normalized_score: None,
        })
        .collect()
}

/// Fills [`ScoreRow::normalized_score`] from the report's ranking channel.
pub fn attach_min_max<T: Scalar>(rows: &mut [ScoreRow], report: &ScoreReport<T>) {
    let values: Vec<f64> = report.ranking().iter().map(|v| v.as_f64()).collect();
    let finite_vals = values.iter().copied().filter(|v| v.is_finite());
    let lo = finite_vals.clone().fold(f64::INFINITY, f64::min);
    let hi = finite_vals.fold(f64::NEG_INFINITY, f64::max);
    for (row, v) in rows.iter_mut().zip(values) {
        row.normalized_score = Some(if v == f64::NEG_INFINITY || !lo.is_finite() {
            0.0
        } else if v == f64::INFINITY {
            1.0
        } else if hi > lo {
            (v - lo) / (hi - lo)
        } else {
            0.0
        });
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes score rows; `meta` goes into a leading `#` comment (CSV) or a `{"meta": ...}` line (JSONL).
pub fn write_scores<W: Write>(
    rows: &[ScoreRow],
    writer: W,
    format: OutputFormat,
    meta: Option<&serde_json::Value>,
) -> Result<()> {
    let mut out = BufWriter::new(writer);
    match format {
        OutputFormat::Csv => {
            if let Some(m) = meta {
                writeln!(out, "# {}", serde_json::to_string(m)?)?;
            }
            let with_label = rows.iter().any(|r| r.label.is_some());
            let with_color = rows.iter().any(|r| r.color.is_some());
            let with_norm = rows.iter().any(|r| r.normalized_score.is_some());
            let mut header = vec!["index", "score", "log_score", "rank"];
            if with_label {
                header.push("label");
            }
            if with_color {
                header.push("color");
            }
            if with_norm {
                header.push("normalized_score");
            }
            writeln!(out, "{}", header.join(","))?;
            for r in rows {
                write!(out, "{},{},{},{}", r.index, opt(r.score), opt(r.log_score), r.rank)?;
                if with_label {
                    write!(out, ",{}", r.label.map(|l| l.to_string()).unwrap_or_default())?;
                }
                if with_color {
                    write!(out, ",{}", r.color.map_or("", Color::name))?;
                }
                if with_norm {
                    write!(out, ",{}", opt(r.normalized_score))?;
                }
                writeln!(out)?;
            }
        }
        OutputFormat::Jsonl => {
            if let Some(m) = meta {
                writeln!(out, "{}", serde_json::json!({ "meta": m }))?;
            }
            for r in rows {
                writeln!(out, "{}", serde_json::to_string(r)?)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn save_scores(
    rows: &[ScoreRow],
    path: &Path,
    format: OutputFormat,
    meta: Option<&serde_json::Value>,
) -> Result<()> {
    write_scores(rows, File::create(path)?, format, meta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CurveRow {
    parameter: String,
    value: f64,
    auc: f64,
}

/// Writes a sweep as `(parameter value, auc)` rows.
pub fn write_curve<W: Write>(
    curve: &SweepCurve,
    writer: W,
    format: OutputFormat,
    meta: Option<&serde_json::Value>,
) -> Result<()> {
    let mut out = BufWriter::new(writer);
    match format {
        OutputFormat::Csv => {
            if let Some(m) = meta {
                writeln!(out, "# {}", serde_json::to_string(m)?)?;
            }
            writeln!(out, "{},auc", curve.parameter_name)?;
            for (v, a) in curve.grid.iter().zip(&curve.auc_values) {
                writeln!(out, "{v},{}", a.auc)?;
            }
        }
        OutputFormat::Jsonl => {
            if let Some(m) = meta {
                writeln!(out, "{}", serde_json::json!({ "meta": m }))?;
            }
            for (v, a) in curve.grid.iter().zip(&curve.auc_values) {
                let row = CurveRow {
                    parameter: curve.parameter_name.clone(),
                    value: *v,
                    auc: a.auc,
                };
                writeln!(out, "{}", serde_json::to_string(&row)?)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn save_curve(
    curve: &SweepCurve,
    path: &Path,
    format: OutputFormat,
    meta: Option<&serde_json::Value>,
) -> Result<()> {
    write_curve(curve, File::create(path)?, format, meta)
}

/// Parses a JSON-lines score file, skipping a leading meta line.
pub fn read_scores_jsonl<R: Read>(reader: R) -> Result<Vec<ScoreRow>> {
    let mut text = String::new();
    let mut reader = reader;
    reader.read_to_string(&mut text)?;
    let mut rows = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let v: serde_json::Value = serde_json::from_str(line)?;
        if v.get("meta").is_some() {
            continue;
        }
        rows.push(serde_json::from_value(v)?);
    }
    Ok(rows)
}
