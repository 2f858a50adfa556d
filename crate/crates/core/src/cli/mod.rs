//! The `edrod` command-line tool.
//!
//! Every artifact starts with a metadata record holding the tool version and
//! the fully resolved configuration (a `#` line in CSV, a `{"meta": ...}`
//! line in JSON-lines). The thread count is not part of that record: results
//! do not depend on it. Wall-clock timings only appear in `bench` output.

mod grid;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::baselines::{DetectorSpec, Method, ScoringContext};
use crate::data_io::{
    attach_min_max, generate, load_csv, save_csv, score_rows, write_csv, write_curve, write_scores, CsvOptions,
    LabelColumn, OutputFormat, SyntheticSpec,
};
use crate::density::Normalization;
use crate::error::{Error, Result};
use crate::evaluation::{confusion_coloring, grid_search_bandwidth, roc_auc, sweep_k};
use crate::linalg::{Dataset, Metric};

pub use grid::{parse_f64_grid, parse_usize_grid};

#[derive(Debug, Parser)]
#[command(
    name = "edrod",
    version,
    about = "Entropy density ratio outlier detection and benchmarking"
)]
pub struct Cli {
    /// Worker threads (results are identical for any value).
    #[arg(long, global = true, env = "EDROD_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every sample of a CSV dataset.
    Score(ScoreArgs),
    /// Score a labelled dataset and report ROC-AUC.
    Eval(ScoreArgs),
    /// AUC as a function of K (grid `start:stop:step` or `a,b,c`).
    SweepK(SweepKArgs),
    /// AUC as a function of the bandwidth; picks the best h. Uses labels: benchmark only.
    GridH(GridHArgs),
    /// Write a synthetic labelled dataset as CSV.
    Generate(GenerateArgs),
    /// Flag the top-N scores and colour samples as true/false positives/negatives.
    Colorize(ColorizeArgs),
    /// Time the scorer over growing n and fit the runtime exponent.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorArg {
    Edrod,
    Knn,
    Kde,
    Lof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceArg {
    Mahalanobis,
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizationArg {
    Standard,
    Squared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum KindArg {
    #[value(name = "2d")]
    #[serde(rename = "2d")]
    TwoD,
    #[value(name = "10d")]
    #[serde(rename = "10d")]
    TenD,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    /// CSV dataset (comma separated, '#' comments).
    #[arg(long)]
    pub input: PathBuf,
    /// Label column: a header name or a 0-based index. Default: a column named `label`.
    #[arg(long)]
    pub label_column: Option<String>,
    /// The first row is data, not a header.
    #[arg(long)]
    pub no_header: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DetectorArgs {
    #[arg(long, value_enum, default_value_t = DetectorArg::Edrod)]
    pub detector: DetectorArg,
    /// Neighbourhood distance; defaults to mahalanobis for edrod, euclidean otherwise.
    #[arg(long, value_enum)]
    pub distance: Option<DistanceArg>,
    /// Kernel constant: `standard` (2 pi)^(-d/2) or `squared` (2 pi)^(-d). Rankings are identical.
    #[arg(long, value_enum, default_value_t = NormalizationArg::Standard)]
    pub normalization: NormalizationArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub detector: DetectorArgs,
    /// Neighbourhood size.
    #[arg(long, default_value_t = DetectorSpec::DEFAULT_K)]
    pub k: usize,
    /// Kernel bandwidth.
    #[arg(long, default_value_t = DetectorSpec::DEFAULT_BANDWIDTH)]
    pub h: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepKArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub detector: DetectorArgs,
    /// K grid: `start:stop:step` (stop included when aligned) or `a,b,c`.
    #[arg(long, default_value = "4:140:8")]
    pub k: String,
    #[arg(long, default_value_t = DetectorSpec::DEFAULT_BANDWIDTH)]
    pub h: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridHArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub detector: DetectorArgs,
    #[arg(long, default_value_t = DetectorSpec::DEFAULT_K)]
    pub k: usize,
    /// Bandwidth grid: `start:stop:step` (stop included when aligned) or `a,b,c`.
    #[arg(long, default_value = "0.1:2:0.05")]
    pub h: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value_t = KindArg::TwoD)]
    pub kind: KindArg,
    /// Total samples for `10d` (10% anomalies).
    #[arg(long, default_value_t = 300)]
    pub n: usize,
    /// Feature count for `10d`.
    #[arg(long, default_value_t = 10)]
    pub dimension: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ColorizeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub detector: DetectorArgs,
    #[arg(long, default_value_t = DetectorSpec::DEFAULT_K)]
    pub k: usize,
    #[arg(long, default_value_t = DetectorSpec::DEFAULT_BANDWIDTH)]
    pub h: f64,
    /// Number of samples flagged; defaults to the number of labelled anomalies.
    #[arg(long)]
    pub top_n: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchArgs {
    #[command(flatten)]
    pub detector: DetectorArgs,
    /// Sample sizes, e.g. `250,500,1000,2000`.
    #[arg(long, default_value = "250,500,1000,2000")]
    pub n: String,
    /// Feature count of the generated data.
    #[arg(long, default_value_t = 10)]
    pub d: usize,
    #[arg(long, default_value_t = DetectorSpec::DEFAULT_K)]
    pub k: usize,
    #[arg(long, default_value_t = 0.36)]
    pub h: f64,
    /// Timed repetitions per size; the minimum is reported.
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

impl DetectorArgs {
    fn spec(&self, k: usize, h: f64) -> DetectorSpec {
        let method = match self.detector {
            DetectorArg::Edrod => Method::Edrod,
            DetectorArg::Knn => Method::KnnSum,
            DetectorArg::Kde => Method::KdeDensity,
            DetectorArg::Lof => Method::Lof,
        };
        let mut spec = DetectorSpec::new(method).with_k(k).with_bandwidth(h);
        if let Some(d) = self.distance {
            spec = spec.with_distance(match d {
                DistanceArg::Mahalanobis => Metric::Mahalanobis,
                DistanceArg::Euclidean => Metric::Euclidean,
            });
        }
        spec.with_normalization(match self.normalization {
            NormalizationArg::Standard => Normalization::Standard,
            NormalizationArg::Squared => Normalization::Squared,
        })
    }
}

impl InputArgs {
    fn load(&self) -> Result<Dataset<f64>> {
        let label = match &self.label_column {
            None => LabelColumn::Auto,
            Some(s) if s == "none" => LabelColumn::None,
            Some(s) => match s.parse::<usize>() {
                Ok(i) => LabelColumn::Index(i),
                Err(_) => LabelColumn::Name(s.clone()),
            },
        };
        load_csv(
            &self.input,
            &CsvOptions {
                has_header: !self.no_header,
                label,
            },
        )
    }
}

impl FormatArg {
    fn format(self) -> OutputFormat {
        match self {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Jsonl => OutputFormat::Jsonl,
        }
    }
}

fn meta(command: &str, config: &impl Serialize, detector: Option<&DetectorSpec>) -> Result<Value> {
    let mut m = json!({
        "tool": "edrod",
        "version": crate::VERSION,
        "command": command,
        "config": serde_json::to_value(config)?,
    });
    if let Some(d) = detector {
        m["detector"] = serde_json::to_value(d)?;
    }
    Ok(m)
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn print_json(v: &Value) -> Result<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "{}", serde_json::to_string_pretty(v)?)?;
    Ok(())
}

fn run_score(args: &ScoreArgs, command: &str) -> Result<()> {
    let data = args.input.load()?;
    let spec = args.detector.spec(args.k, args.h);
    let report = crate::baselines::score(&data, &spec)?;
    let m = meta(command, args, Some(&spec))?;
    let rows = score_rows(&report, data.labels(), None);
    if command == "score" {
        return write_scores(
            &rows,
            sink(args.output.output.as_deref())?,
            args.output.format.format(),
            Some(&m),
        );
    }
    let labels = data.require_labels()?;
    let auc = roc_auc(report.ranking(), labels)?;
    if let Some(path) = &args.output.output {
        write_scores(&rows, File::create(path)?, args.output.format.format(), Some(&m))?;
    }
    print_json(&json!({ "meta": m, "auc": auc, "zero_entropy": report.zero_entropy }))
}

fn run_sweep_k(args: &SweepKArgs) -> Result<()> {
    let data = args.input.load()?;
    let grid = parse_usize_grid(&args.k)?;
    let spec = args.detector.spec(grid[0], args.h);
    let curve = sweep_k(&data, &spec, &grid)?;
    let m = meta("sweep-k", args, Some(&spec))?;
    if let Some(path) = &args.output.output {
        write_curve(&curve, File::create(path)?, args.output.format.format(), Some(&m))?;
    }
    print_json(&json!({
        "meta": m,
        "grid": curve.grid,
        "auc": curve.aucs(),
        "spread": curve.spread,
        "mean_auc": curve.mean_auc(),
    }))
}

fn run_grid_h(args: &GridHArgs) -> Result<()> {
    let data = args.input.load()?;
    let grid = parse_f64_grid(&args.h)?;
    let spec = args.detector.spec(args.k, grid[0]);
    let search = grid_search_bandwidth(&data, &spec, &grid)?;
    let m = meta("grid-h", args, Some(&spec))?;
    if let Some(path) = &args.output.output {
        write_curve(
            &search.curve,
            File::create(path)?,
            args.output.format.format(),
            Some(&m),
        )?;
    }
    print_json(&json!({
        "meta": m,
        "note": "bandwidth chosen with the labels; for benchmarking only",
        "best_h": search.best_bandwidth,
        "best_auc": search.best_auc,
        "grid": search.curve.grid,
        "auc": search.curve.aucs(),
    }))
}

fn synthetic_spec(args: &GenerateArgs) -> SyntheticSpec {
    match args.kind {
        KindArg::TwoD => SyntheticSpec::two_dim_mixed(args.seed),
        KindArg::TenD => SyntheticSpec::ten_dim_gaussian(args.n, args.dimension, args.seed),
    }
}

fn run_generate(args: &GenerateArgs) -> Result<()> {
    let spec = synthetic_spec(args);
    let data: Dataset<f64> = generate(&spec)?;
    let mut m = meta("generate", args, None)?;
    m["spec"] = serde_json::to_value(&spec)?;
    let comment = serde_json::to_string(&m)?;
    match &args.output {
        Some(p) => save_csv(&data, p, Some(&comment)),
        None => write_csv(&data, io::stdout().lock(), Some(&comment)),
    }
}

fn run_colorize(args: &ColorizeArgs) -> Result<()> {
    let data = args.input.load()?;
    let labels = data.require_labels()?;
    let spec = args.detector.spec(args.k, args.h);
    let report = crate::baselines::score(&data, &spec)?;
    let top_n = args.top_n.unwrap_or_else(|| data.anomaly_count());
    let coloring = confusion_coloring(report.ranking(), labels, top_n)?;
    let m = meta("colorize", args, Some(&spec))?;
    if let Some(path) = &args.output.output {
        let mut rows = score_rows(&report, Some(labels), Some(&coloring.per_sample));
        attach_min_max(&mut rows, &report);
        write_scores(&rows, File::create(path)?, args.output.format.format(), Some(&m))?;
    }
    print_json(&json!({
        "meta": m,
        "top_n": coloring.top_n,
        "green": coloring.green,
        "yellow": coloring.yellow,
        "purple": coloring.purple,
        "red": coloring.red,
    }))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn run_bench(args: &BenchArgs) -> Result<()> {
    let sizes = parse_usize_grid(&args.n)?;
    if sizes.len() < 2 {
        return Err(Error::Grid("bench needs at least two sample sizes".into()));
    }
    if args.reps == 0 {
        return Err(Error::Grid("--reps must be at least 1".into()));
    }
    let spec = args.detector.spec(args.k, args.h);
    let mut points = Vec::new();
    let mut seconds = Vec::new();
    for &n in &sizes {
        let data: Dataset<f64> = generate(&SyntheticSpec::ten_dim_gaussian(n, args.d, args.seed))?;
        let mut best = f64::INFINITY;
        for _ in 0..args.reps {
            let start = Instant::now();
            let report = ScoringContext::new(&data).score(&spec)?;
            std::hint::black_box(&report);
            best = best.min(start.elapsed().as_secs_f64());
        }
        seconds.push(best);
        points.push(json!({ "n": n, "seconds": best }));
    }
    let x: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let slope = log_log_slope(&x, &seconds);
    let m = meta("bench", args, Some(&spec))?;
    let body = json!({
        "meta": m,
        "timing": { "points": points, "threads": rayon::current_num_threads() },
        "slope": slope,
    });
    let mut out = sink(args.output.as_deref())?;
    writeln!(out, "{}", serde_json::to_string_pretty(&body)?)?;
    Ok(())
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    let go = || match &cli.command {
        Command::Score(a) => run_score(a, "score"),
        Command::Eval(a) => run_score(a, "eval"),
        Command::SweepK(a) => run_sweep_k(a),
        Command::GridH(a) => run_grid_h(a),
        Command::Generate(a) => run_generate(a),
        Command::Colorize(a) => run_colorize(a),
        Command::Bench(a) => run_bench(a),
    };
    match cli.threads {
        Some(0) => Err(Error::Grid("--threads must be at least 1".into())),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Io(io::Error::other(e)))?;
            pool.install(go)
        }
        None => go(),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Score(_) => "score",
        Command::Eval(_) => "eval",
        Command::SweepK(_) => "sweep-k",
        Command::GridH(_) => "grid-h",
        Command::Generate(_) => "generate",
        Command::Colorize(_) => "colorize",
        Command::Bench(_) => "bench",
    }
}

/// Parses `args`, runs, and returns the process exit code
/// (0 success, 1 runtime error, 2 usage error).
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        // a closed downstream pipe (`edrod score ... | head`) is not a failure
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => 0,
        Err(Error::Json(e)) if e.io_error_kind() == Some(io::ErrorKind::BrokenPipe) => 0,
        Err(e) => {
            eprintln!("edrod {}: error: {e}", command_name(&cli.command));
            1
        }
    }
}
