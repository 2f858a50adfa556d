//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the verdict lines are always
//! printed. Every tolerance and limit is a named constant below. The process
//! exits non-zero if any gating criterion fails.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use edrod::neighbors::select_neighbors;
use edrod::rank::descending_order;
use edrod::*;
use rand::Rng;

/// Relative agreement with the brute-force oracle.
const C1_REL_TOL: f64 = 1e-9;
const C1_DATASETS: usize = 50;
const C1_TIME_LIMIT_S: f64 = 10.0;
/// Slack on the entropy bounds `0 <= E <= ln(K + 1)`.
const C2_ABS_TOL: f64 = 1e-12;
const C2_CASES: usize = 200;
const C3_SCALES: [f64; 3] = [1e-12, 1.0, 1e12];
const C4_MIN_AUC: f64 = 0.93;
const C4_K: usize = 20;
const C4_TIME_LIMIT_S: f64 = 30.0;
const C4_SEED: u64 = 42;
const C6_SEEDS: u64 = 10;
const C6_H: f64 = 0.36;
const C6_TIME_LIMIT_S: f64 = 180.0;
const C6_MIN_MEAN_AUC: f64 = 0.95;
const C6_MAX_SPREAD: f64 = 0.02;
/// KNN's mean spread must be at least this multiple of EDROD's.
const C6_KNN_SPREAD_RATIO: f64 = 2.0;
const C7_MAX_MEAN_SHIFT: f64 = 0.02;
const C8_SLOPE: (f64, f64) = (1.7, 2.3);
const C8_TIME_LIMIT_S: f64 = 120.0;
const C5_AUC: (f64, f64) = (0.959, 0.01);
const C5_TOP_N: usize = 130;
/// Green, red, yellow, purple.
const C5_COUNTS: [u64; 4] = [819, 23, 107, 23];
const C5_COUNT_SLACK: u64 = 5;
const C10_N: usize = 300;
const C10_D: usize = 40;
const C10_H: f64 = 0.5;
const C10_K: usize = 20;

fn k_grid() -> Vec<usize> {
    (4..=140).step_by(8).collect()
}

/// Bandwidth grid for the 2-D selection: 0.05, 0.10, ..., 2.00.
fn h_grid() -> Vec<f64> {
    (1..=40).map(|i| (i as f64 * 0.05 * 1e6).round() / 1e6).collect()
}

struct Verdict {
    id: &'static str,
    gating: bool,
    outcome: Option<bool>,
    detail: String,
}

impl Verdict {
    fn new(id: &'static str, pass: bool, detail: String) -> Self {
        Self {
            id,
            gating: true,
            outcome: Some(pass),
            detail,
        }
    }

    fn print(&self) {
        let tag = match (self.outcome, self.gating) {
            (None, _) => "SKIP",
            (Some(true), _) => "PASS",
            (Some(false), true) => "FAIL",
            (Some(false), false) => "FAIL (non-gating)",
        };
        println!("[{tag}] {}: {}", self.id, self.detail);
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_edrod"))
}

fn auc_of(report: &ScoreReport64, labels: &[bool]) -> f64 {
    roc_auc(report.ranking(), labels).unwrap().auc
}

fn rows_of(data: &Dataset64) -> Vec<Vec<f64>> {
    data.rows().map(|r| r.to_vec()).collect()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut rng = common::rng(0xC1);
    let (mut worst, mut order_mismatches, mut checked) = (0.0f64, 0, 0);
    while checked < C1_DATASETS {
        let d = rng.random_range(1..=5);
        let n = rng.random_range(d + 4..=30);
        let k = rng.random_range(1..n);
        let h = rng.random_range(0.2..5.0);
        let rows = common::normal_rows(&mut rng, n, d);
        let data = Dataset64::from_rows(rows.clone()).unwrap();
        let got = score(&data, &DetectorSpec::edrod(k, h)).unwrap();
        let want = common::edrod(&rows, k, h);
        if descending_order(got.ranking()) != common::descending(&want.edr) {
            order_mismatches += 1;
        }
        for (g, w) in got.scores.iter().zip(&want.edr) {
            worst = worst.max(rel_err(*g, *w));
        }
        checked += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = order_mismatches == 0 && worst <= C1_REL_TOL && secs < C1_TIME_LIMIT_S;
    Verdict::new(
        "criterion 1 (oracle equivalence)",
        pass,
        format!(
            "{checked} datasets, rank-order mismatches {order_mismatches}, max rel err {worst:.2e} (tol {C1_REL_TOL:e}), {secs:.2} s (limit {C1_TIME_LIMIT_S} s)"
        ),
    )
}

fn criterion_2() -> Verdict {
    let mut rng = common::rng(0xC2);
    let (mut violations, mut min_slack) = (0, f64::INFINITY);
    for case in 0..C2_CASES {
        let d = rng.random_range(1..=6);
        let n = rng.random_range(d + 4..=60);
        let k = rng.random_range(1..n);
        // log-uniform bandwidth over four decades, including underflow-prone ones
        let h = 10f64.powf(rng.random_range(-2.0..2.0));
        let spread = 10f64.powf(rng.random_range(-1.0..2.0));
        let mut rows = common::normal_rows(&mut rng, n, d);
        if case % 4 == 0 {
            // duplicated rows produce exactly flat groups
            let copy = rows[0].clone();
            rows[1] = copy;
        }
        for r in rows.iter_mut() {
            r.iter_mut().for_each(|v| *v *= spread);
        }
        let data = Dataset64::from_rows(rows).unwrap();
        let dist = distance_matrix(&data, Metric::Mahalanobis).unwrap();
        let table = select_neighbors(&dist, k).unwrap();
        let density = estimate_density(&data, &KernelSpec::gaussian(h)).unwrap();
        let report = edr_scores(&density, &table).unwrap();
        let upper = ((k + 1) as f64).ln();
        for &e in &report.entropy {
            if !(e >= -C2_ABS_TOL && e <= upper + C2_ABS_TOL) {
                violations += 1;
            }
            min_slack = min_slack.min(e + C2_ABS_TOL).min(upper + C2_ABS_TOL - e);
        }
    }
    Verdict::new(
        "criterion 2 (entropy bounds)",
        violations == 0,
        format!("{C2_CASES} random cases, {violations} samples outside [0, ln(K+1)] (slack {C2_ABS_TOL:e}), min margin {min_slack:.2e}"),
    )
}

fn criterion_3() -> Verdict {
    let sets: Vec<(&str, Dataset64, usize, f64)> = vec![
        (
            "2-D seed 42",
            generate(&SyntheticSpec::two_dim_mixed(42)).unwrap(),
            20,
            1.35,
        ),
        (
            "10-D n=300 seed 0",
            generate(&SyntheticSpec::ten_dim_gaussian(300, 10, 0)).unwrap(),
            20,
            0.36,
        ),
        (
            "10-D n=700 seed 1",
            generate(&SyntheticSpec::ten_dim_gaussian(700, 10, 1)).unwrap(),
            60,
            0.36,
        ),
        ("40-D wide", high_dim_dataset(7), C10_K, C10_H),
    ];
    let mut failures = Vec::new();
    let mut external_max_shift = 0.0f64;
    let mut external_order_changes = 0;
    for (name, data, k, h) in &sets {
        let labels = data.labels().unwrap();
        let dist = distance_matrix(data, Metric::Mahalanobis).unwrap();
        let table = select_neighbors(&dist, *k).unwrap();
        let density = estimate_density(data, &KernelSpec::gaussian(*h)).unwrap();
        let base = edr_scores(&density, &table).unwrap();
        let base_order = descending_order(&base.log_edr_relative);
        let base_auc = roc_auc(&base.log_edr_relative, labels).unwrap().auc;
        for c in C3_SCALES {
            let scaled = edr_scores(&density.scaled(c), &table).unwrap();
            let auc = roc_auc(&scaled.log_edr_relative, labels).unwrap().auc;
            if descending_order(&scaled.log_edr_relative) != base_order || auc.to_bits() != base_auc.to_bits() {
                failures.push(format!("{name} c={c:e}"));
            }
            // Informational: rescaling the raw log densities outside the container
            // rounds every entry, so only near-equality is expected there.
            let shifted: Vec<f64> = density.log_values().iter().map(|v| v + c.ln()).collect();
            let external = edr_scores(&DensityVector::from_log_values(shifted, *density.spec()), &table).unwrap();
            if descending_order(&external.log_edr_relative) != base_order {
                external_order_changes += 1;
            }
            for (a, b) in external.log_edr.iter().zip(&base.log_edr) {
                if a.is_finite() && b.is_finite() {
                    external_max_shift = external_max_shift.max((a - b - (-c.ln())).abs());
                }
            }
        }
        let standard = score(data, &DetectorSpec::edrod(*k, *h)).unwrap();
        let squared = score(
            data,
            &DetectorSpec::edrod(*k, *h).with_normalization(Normalization::Squared),
        )
        .unwrap();
        let (a, b) = (auc_of(&standard, labels), auc_of(&squared, labels));
        if a.to_bits() != b.to_bits() || descending_order(standard.ranking()) != descending_order(squared.ranking()) {
            failures.push(format!("{name} normalization"));
        }
    }
    Verdict::new(
        "criterion 3 (scale invariance)",
        failures.is_empty(),
        format!(
            "{} datasets x c in {C3_SCALES:?}: order and AUC bit-identical{}; both normalizations agree; \
             externally rescaled log densities: {external_order_changes} order changes, max log-score drift {external_max_shift:.1e}",
            sets.len(),
            if failures.is_empty() { String::new() } else { format!(" except {failures:?}") }
        ),
    )
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let data: Dataset64 = generate(&SyntheticSpec::two_dim_mixed(C4_SEED)).unwrap();
    let labels = data.labels().unwrap();
    let search = grid_search_bandwidth(&data, &DetectorSpec::edrod(C4_K, 1.0), &h_grid()).unwrap();
    let h = search.best_bandwidth;
    let edrod = search.best_auc;
    let knn = auc_of(&score(&data, &DetectorSpec::knn_sum(C4_K)).unwrap(), labels);
    let kde = auc_of(&score(&data, &DetectorSpec::kde(h)).unwrap(), labels);
    let lof = auc_of(&score(&data, &DetectorSpec::lof(C4_K)).unwrap(), labels);
    let kde_own = grid_search_bandwidth(&data, &DetectorSpec::kde(1.0), &h_grid()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pass = edrod >= C4_MIN_AUC && edrod >= knn && edrod >= kde && edrod >= lof && secs < C4_TIME_LIMIT_S;
    Verdict::new(
        "criterion 4 (2-D benchmark)",
        pass,
        format!(
            "seed {C4_SEED}, K={C4_K}, selected h={h}: EDROD {edrod:.4} (min {C4_MIN_AUC}), KNN {knn:.4}, KDE@h {kde:.4}, LOF {lof:.4}; \
             KDE at its own best h={} reaches {:.4}; {secs:.2} s (limit {C4_TIME_LIMIT_S} s)",
            kde_own.best_bandwidth, kde_own.best_auc
        ),
    )
}

fn criterion_5() -> Verdict {
    let id = "criterion 5 (reference 2-D data, non-gating)";
    let Ok(path) = std::env::var("EDROD_REFERENCE_2D_CSV") else {
        return Verdict {
            id,
            gating: false,
            outcome: None,
            detail: "EDROD_REFERENCE_2D_CSV not set; reference dataset not available".into(),
        };
    };
    let run = || -> std::result::Result<(bool, String), String> {
        let data: Dataset64 = load_csv(Path::new(&path), &CsvOptions::default()).map_err(|e| e.to_string())?;
        let search =
            grid_search_bandwidth(&data, &DetectorSpec::edrod(C4_K, 1.0), &h_grid()).map_err(|e| e.to_string())?;
        let h = search.best_bandwidth.to_string();
        let k = C4_K.to_string();
        let cli = |args: &[&str]| -> std::result::Result<serde_json::Value, String> {
            let out = bin()
                .args(args)
                .args(["--k", &k, "--h", &h, "--input", &path])
                .output()
                .map_err(|e| e.to_string())?;
            if !out.status.success() {
                return Err(String::from_utf8_lossy(&out.stderr).trim().to_string());
            }
            serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())
        };
        let auc = cli(&["eval"])?["auc"]["auc"].as_f64().unwrap_or(f64::NAN);
        let top_n = C5_TOP_N.to_string();
        let colors = cli(&["colorize", "--top-n", &top_n])?;
        let counts: Vec<u64> = ["green", "red", "yellow", "purple"]
            .iter()
            .map(|c| colors[*c].as_u64().unwrap_or(u64::MAX))
            .collect();
        let auc_ok = (auc - C5_AUC.0).abs() <= C5_AUC.1;
        let counts_ok = counts
            .iter()
            .zip(C5_COUNTS)
            .all(|(&g, w)| g.abs_diff(w) <= C5_COUNT_SLACK);
        Ok((
            auc_ok && counts_ok,
            format!(
                "{path}: h={h}, AUC {auc:.4} (target {} +/- {}), green/red/yellow/purple {counts:?} (target {C5_COUNTS:?} +/- {C5_COUNT_SLACK})",
                C5_AUC.0, C5_AUC.1
            ),
        ))
    };
    let (outcome, detail) = match run() {
        Ok((pass, detail)) => (pass, detail),
        Err(e) => (false, format!("{path}: {e}")),
    };
    Verdict {
        id,
        gating: false,
        outcome: Some(outcome),
        detail,
    }
}

/// Per-seed AUC curves over the K grid for EDROD and KNN.
fn ten_dim_curves(n: usize) -> Vec<(SweepCurve, SweepCurve)> {
    (0..C6_SEEDS)
        .map(|seed| {
            let data: Dataset64 = generate(&SyntheticSpec::ten_dim_gaussian(n, 10, seed)).unwrap();
            let e = sweep_k(&data, &DetectorSpec::edrod(4, C6_H), &k_grid()).unwrap();
            let k = sweep_k(&data, &DetectorSpec::knn_sum(4), &k_grid()).unwrap();
            (e, k)
        })
        .collect()
}

fn mean(v: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = v.into_iter().collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn criterion_6(curves: &[(SweepCurve, SweepCurve)], secs: f64) -> Verdict {
    let edrod_spread = mean(curves.iter().map(|(e, _)| e.spread));
    let worst_spread = curves.iter().map(|(e, _)| e.spread).fold(0.0, f64::max);
    let knn_spread = mean(curves.iter().map(|(_, k)| k.spread));
    let edrod_auc = mean(curves.iter().map(|(e, _)| e.mean_auc()));
    let knn_auc = mean(curves.iter().map(|(_, k)| k.mean_auc()));
    let pass = edrod_auc >= C6_MIN_MEAN_AUC
        && worst_spread <= C6_MAX_SPREAD
        && knn_spread >= C6_KNN_SPREAD_RATIO * edrod_spread
        && secs < C6_TIME_LIMIT_S;
    Verdict::new(
        "criterion 6 (stability over K, n=300)",
        pass,
        format!(
            "{C6_SEEDS} seeds, h={C6_H}, K=4..140 step 8: EDROD mean AUC {edrod_auc:.4} (min {C6_MIN_MEAN_AUC}), \
             max per-instance spread {worst_spread:.4} (max {C6_MAX_SPREAD}), mean spread {edrod_spread:.5}; \
             KNN mean spread {knn_spread:.4} (needs >= {C6_KNN_SPREAD_RATIO}x EDROD), mean AUC {knn_auc:.4}; \
             {secs:.1} s (limit {C6_TIME_LIMIT_S} s)"
        ),
    )
}

fn criterion_7(small: &[(SweepCurve, SweepCurve)]) -> Verdict {
    let large = ten_dim_curves(700);
    let m300 = mean(small.iter().map(|(e, _)| e.mean_auc()));
    let m700 = mean(large.iter().map(|(e, _)| e.mean_auc()));
    let shift = (m700 - m300).abs();
    Verdict::new(
        "criterion 7 (stability over n)",
        shift <= C7_MAX_MEAN_SHIFT,
        format!("mean EDROD AUC n=300 {m300:.4}, n=700 {m700:.4}, |shift| {shift:.4} (max {C7_MAX_MEAN_SHIFT})"),
    )
}

fn criterion_8() -> Verdict {
    let start = Instant::now();
    let out = bin()
        .args([
            "bench",
            "--n",
            "250,500,1000,2000",
            "--d",
            "10",
            "--reps",
            "3",
            "--threads",
            "1",
        ])
        .output()
        .unwrap();
    if !out.status.success() {
        return Verdict::new(
            "criterion 8 (quadratic scaling)",
            false,
            format!("bench failed: {}", String::from_utf8_lossy(&out.stderr).trim()),
        );
    }
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let slope = v["slope"].as_f64().unwrap_or(f64::NAN);
    let timings: Vec<String> = v["timing"]["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| format!("n={} {:.4}s", p["n"], p["seconds"].as_f64().unwrap_or(f64::NAN)))
        .collect();
    let secs = start.elapsed().as_secs_f64();
    Verdict::new(
        "criterion 8 (quadratic scaling)",
        slope >= C8_SLOPE.0 && slope <= C8_SLOPE.1 && secs < C8_TIME_LIMIT_S,
        format!(
            "log-log slope {slope:.3} (accepted {C8_SLOPE:?}); {}; {secs:.1} s (limit {C8_TIME_LIMIT_S} s)",
            timings.join(", ")
        ),
    )
}

fn criterion_9() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let gen = bin()
        .args(["generate", "--kind", "10d", "--n", "300", "--seed", "5", "--output"])
        .arg(&data)
        .output()
        .unwrap();
    assert!(gen.status.success());
    let mut differing = Vec::new();
    let runs: [(&str, &[&str], &str); 3] = [
        ("eval", &["--k", "20", "--h", "0.36"], "scores.csv"),
        (
            "eval",
            &["--k", "20", "--h", "0.36", "--format", "jsonl"],
            "scores.jsonl",
        ),
        ("sweep-k", &["--k", "4:140:8", "--h", "0.36"], "curve.csv"),
    ];
    for (cmd, extra, file) in runs {
        let mut outputs = Vec::new();
        for threads in ["1", "8"] {
            // same relative output name in separate directories, so the
            // recorded configuration is identical
            let run_dir = dir.path().join(format!("threads-{threads}"));
            std::fs::create_dir_all(&run_dir).unwrap();
            let path = run_dir.join(file);
            let out = bin()
                .current_dir(&run_dir)
                .args(["--threads", threads, cmd])
                .args(extra)
                .arg("--input")
                .arg(&data)
                .arg("--output")
                .arg(file)
                .output()
                .unwrap();
            assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
            outputs.push((std::fs::read(&path).unwrap(), out.stdout));
        }
        if outputs[0] != outputs[1] {
            differing.push(format!("{cmd} {file}"));
        }
    }
    Verdict::new(
        "criterion 9 (thread-count determinism)",
        differing.is_empty(),
        if differing.is_empty() {
            "eval (csv, jsonl) and sweep-k artifacts and stdout byte-identical for --threads 1 vs 8".into()
        } else {
            format!("differences in {differing:?}")
        },
    )
}

/// 40 features with the 10-D generator's layout stretched fourfold, so that
/// kernel terms for the anomalies fall far below the smallest `f64`.
fn high_dim_dataset(seed: u64) -> Dataset64 {
    let mut spec = SyntheticSpec::ten_dim_gaussian(C10_N, C10_D, seed);
    spec.geometry.center_range *= 4.0;
    spec.geometry.component_std.iter_mut().for_each(|s| *s *= 4.0);
    spec.geometry.anomaly_range = (spec.geometry.anomaly_range.0 * 4.0, spec.geometry.anomaly_range.1 * 4.0);
    spec.geometry.core_exclusion *= 4.0;
    generate(&spec).unwrap()
}

fn criterion_10() -> Verdict {
    let data = high_dim_dataset(7);
    let labels = data.labels().unwrap();
    let naive = common::kde(&rows_of(&data), C10_H);
    let underflowed = naive.iter().filter(|v| **v == 0.0).count();

    let report = score(&data, &DetectorSpec::edrod(C10_K, C10_H)).unwrap();
    let log_scores = report.log_scores.clone().unwrap();
    let finite = log_scores.iter().all(|v| v.is_finite());
    let auc = roc_auc(report.ranking(), labels).unwrap().auc;

    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("wide.csv");
    save_csv(&data, &input, None).unwrap();
    let mut artifact_problems = Vec::new();
    for format in ["csv", "jsonl"] {
        let path = dir.path().join(format!("scores.{format}"));
        let out = bin()
            .args(["eval", "--k", "20", "--h", "0.5", "--format", format, "--input"])
            .arg(&input)
            .arg("--output")
            .arg(&path)
            .output()
            .unwrap();
        if !out.status.success() {
            artifact_problems.push(format!("{format}: {}", String::from_utf8_lossy(&out.stderr).trim()));
            continue;
        }
        for text in [
            String::from_utf8_lossy(&out.stdout).into_owned(),
            std::fs::read_to_string(&path).unwrap(),
        ] {
            let lower = text.to_ascii_lowercase();
            if lower.contains("nan") || lower.contains("inf") {
                artifact_problems.push(format!("{format}: non-finite token"));
            }
        }
    }
    let pass = underflowed > 0 && finite && (0.0..=1.0).contains(&auc) && artifact_problems.is_empty();
    Verdict::new(
        "criterion 10 (numerical stability, d=40)",
        pass,
        format!(
            "n={C10_N}, d={C10_D}, h={C10_H}: {underflowed} naive linear densities underflow to 0; \
             log-EDR finite for all samples: {finite}; AUC {auc:.4}; artifact issues {artifact_problems:?}"
        ),
    )
}

fn main() {
    let mut verdicts = vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
    ];
    let start = Instant::now();
    let small = ten_dim_curves(300);
    verdicts.push(criterion_6(&small, start.elapsed().as_secs_f64()));
    verdicts.push(criterion_7(&small));
    verdicts.push(criterion_8());
    verdicts.push(criterion_9());
    verdicts.push(criterion_10());

    println!();
    for v in &verdicts {
        v.print();
    }
    let failed = verdicts.iter().filter(|v| v.gating && v.outcome == Some(false)).count();
    println!("\nacceptance: {} criteria, {failed} gating failures", verdicts.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
