//! End-to-end experiment: feature ranking, split, optional resampling,
//! repeated cross-validation of each algorithm, refit and hold-out scoring,
//! and report rendering.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::config::{BenchConfig, DataSource, LeakageMode};
use crate::cv;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::importance::{cv_importance_detailed, select_top_k, xml_escape, ImportanceRanking, ImportanceSource};
use crate::ingest::{self, generate_synthetic, PreprocessReport};
use crate::metrics::{self, aggregate, ConfusionMatrix, CvSummary};
use crate::models::{self, Algorithm, ModelConfig};
use crate::resample::{self, ResampleConfig, ResampleMethod};
use crate::seed;
use crate::split::{repeated_stratified_kfold, stratified_split};

/// Reads either a raw survey export (has an `IE` column) or a canonical CSV
/// (has a `label` column). The preprocessing report is returned for raw input.
pub fn load_csv(path: &Path) -> Result<(Dataset, Option<PreprocessReport>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let raw = ingest::parse_raw(bytes.as_slice())?;
    if raw.header.iter().any(|h| h.trim().eq_ignore_ascii_case("IE")) {
        let pre = ingest::preprocess(&raw)?;
        Ok((pre.dataset, Some(pre.report)))
    } else {
        Ok((ingest::read_canonical(bytes.as_slice(), None)?, None))
    }
}

pub fn load_source(source: &DataSource) -> Result<Dataset> {
    match source {
        DataSource::Csv(path) => load_csv(path).map(|(ds, _)| ds),
        DataSource::Synthetic(spec) => generate_synthetic(spec),
    }
}

/// Forest importance over all features plus its cross-validated accuracy.
#[derive(Clone, Debug, PartialEq)]
pub struct Baseline {
    pub ranking: ImportanceRanking,
    pub cv_accuracy: f64,
    pub cv: CvSummary,
}

/// Random-forest CV (`cfg.folds` folds, `cfg.baseline_reps` repetitions) on
/// every feature of `ds`.
pub fn run_baseline(ds: &Dataset, cfg: &BenchConfig) -> Result<Baseline> {
    let model = ModelConfig {
        algorithm: Algorithm::Rf,
        hyper: cfg.hyper,
        seed: seed::derive_str(cfg.seed, "baseline"),
    };
    let (ranking, records) = cv_importance_detailed(ds, &model, cfg.folds, cfg.baseline_reps)?;
    let cv = aggregate(&records)?;
    Ok(Baseline {
        ranking,
        cv_accuracy: cv.accuracy_mean,
        cv,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmResult {
    pub algorithm: Algorithm,
    pub cv: Option<CvSummary>,
    pub test_accuracy: Option<f64>,
    pub test_kappa: Option<f64>,
    /// False if an iterative solver stopped on its iteration budget.
    pub converged: bool,
    /// Set when training failed; the row is then partial.
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvRecordRow {
    pub algorithm: Algorithm,
    pub rep: usize,
    pub fold: usize,
    pub accuracy: f64,
    pub kappa: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    /// `original`, `smote` or `adasyn`.
    pub variant: String,
    pub leakage_mode: LeakageMode,
    pub seed: u64,
    pub split_ratio: f64,
    pub folds: usize,
    pub reps: usize,
    pub n_full: usize,
    pub n_features_full: usize,
    /// Training rows before resampling.
    pub n_train_original: usize,
    /// Training rows used for the final refit (after resampling).
    pub n_train: usize,
    pub n_test: usize,
    pub nir_full: f64,
    pub nir_test: f64,
    pub selected_features: Vec<String>,
    pub baseline_accuracy: Option<f64>,
    pub wall_clock_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub meta: RunMeta,
    /// Sorted by test accuracy, best first; failed rows last.
    pub rows: Vec<AlgorithmResult>,
    pub records: Vec<CvRecordRow>,
    pub ranking: Option<ImportanceRanking>,
}

fn variant_name(method: ResampleMethod) -> String {
    match method {
        ResampleMethod::None => "original".into(),
        m => m.to_string(),
    }
}

/// Runs the full grid described by `cfg` on a worker pool of `cfg.threads`.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let ds = load_source(&cfg.source)?;
    with_pool(cfg.threads, || run_on(&ds, cfg))
}

/// Runs `f` on a dedicated pool of `threads` workers (`None`: one per core).
pub fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
        .install(f)
}

/// Runs the grid on an already loaded dataset, in the current thread pool.
pub fn run_on(full: &Dataset, cfg: &BenchConfig) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let started = Instant::now();
    if full.n() == 0 {
        return Err(Error::InvalidDataset("no rows".into()));
    }

    let (ranking, baseline_accuracy) = match &cfg.importance_cache {
        Some(path) => {
            let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
            (ImportanceRanking::read_csv(file, ImportanceSource::RfGini)?, None)
        }
        None => {
            let b = run_baseline(full, cfg)?;
            info!("baseline rf cv accuracy {:.4}", b.cv_accuracy);
            (b.ranking, Some(b.cv_accuracy))
        }
    };
    let k = cfg.top_k.min(full.p());
    if k < cfg.top_k {
        warn!("top_k {} exceeds {} features; using all", cfg.top_k, full.p());
    }
    let selected = select_top_k(&ranking, k)?;
    let ds = full.select_features(&selected)?;

    let split = stratified_split(ds.labels(), ds.class_names(), cfg.split_ratio, seed::derive_str(cfg.seed, "split"))?;
    let train = ds.subset(&split.train_indices);
    let test = ds.subset(&split.test_indices);

    let rc = ResampleConfig {
        seed: seed::derive_str(cfg.seed, "resample"),
        ..cfg.resample
    };
    let resampled = resample::resample(&train, &rc)?.dataset;
    let (cv_set, in_fold) = match cfg.leakage_mode {
        LeakageMode::PaperReplication => (&resampled, None),
        LeakageMode::LeakFree => (&train, Some(&rc)),
    };
    let plan = repeated_stratified_kfold(cv_set.labels(), cfg.folds, cfg.reps, seed::derive_str(cfg.seed, "folds"))?;

    let mut rows = Vec::with_capacity(cfg.algorithms.len());
    let mut records = Vec::new();
    for &algorithm in &cfg.algorithms {
        let model_cfg = ModelConfig {
            algorithm,
            hyper: cfg.hyper,
            seed: seed::derive_str(cfg.seed, algorithm.name()),
        };
        match evaluate(&model_cfg, cv_set, &plan, in_fold, &resampled, &test) {
            Ok((row, recs)) => {
                records.extend(recs);
                rows.push(row);
            }
            Err(e) => {
                warn!("{algorithm} failed: {e}");
                rows.push(AlgorithmResult {
                    algorithm,
                    cv: None,
                    test_accuracy: None,
                    test_kappa: None,
                    converged: false,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    rows.sort_by(|a, b| {
        let key = |r: &AlgorithmResult| r.test_accuracy.unwrap_or(f64::NEG_INFINITY);
        key(b).total_cmp(&key(a)).then_with(|| a.algorithm.name().cmp(b.algorithm.name()))
    });

    let meta = RunMeta {
        variant: variant_name(cfg.resample.method),
        leakage_mode: cfg.leakage_mode,
        seed: cfg.seed,
        split_ratio: cfg.split_ratio,
        folds: cfg.folds,
        reps: cfg.reps,
        n_full: full.n(),
        n_features_full: full.p(),
        n_train_original: train.n(),
        n_train: resampled.n(),
        n_test: test.n(),
        nir_full: metrics::no_information_rate(full)?,
        nir_test: metrics::no_information_rate(&test)?,
        selected_features: selected,
        baseline_accuracy,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    };
    Ok(BenchmarkReport {
        meta,
        rows,
        records,
        ranking: Some(ranking),
    })
}

fn evaluate(
    model_cfg: &ModelConfig,
    cv_set: &Dataset,
    plan: &crate::split::FoldPlan,
    in_fold: Option<&ResampleConfig>,
    refit_set: &Dataset,
    test: &Dataset,
) -> Result<(AlgorithmResult, Vec<CvRecordRow>)> {
    let cells: Vec<cv::CellResult> = cv::run_cells(cv_set, plan, model_cfg, in_fold)
        .into_iter()
        .collect::<Result<_>>()?;
    let recs: Vec<CvRecordRow> = cells
        .iter()
        .map(|c| CvRecordRow {
            algorithm: model_cfg.algorithm,
            rep: c.record.rep,
            fold: c.record.fold,
            accuracy: c.record.accuracy,
            kappa: c.record.kappa,
        })
        .collect();
    let summary = aggregate(&cells.iter().map(|c| c.record).collect::<Vec<_>>())?;
    let refit_cfg = ModelConfig {
        seed: seed::derive_str(model_cfg.seed, "refit"),
        ..*model_cfg
    };
    let model = models::train(refit_set, &refit_cfg)?;
    let cm = ConfusionMatrix::from_predictions(test.labels(), &model.predict(test), test.n_classes());
    if !model.converged() {
        warn!("{} hit its iteration budget on the refit", model_cfg.algorithm);
    }
    Ok((
        AlgorithmResult {
            algorithm: model_cfg.algorithm,
            cv: Some(summary),
            test_accuracy: Some(metrics::accuracy(&cm)?),
            test_kappa: Some(metrics::kappa(&cm)?),
            converged: model.converged(),
            error: None,
        },
        recs,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
    Svg,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            "svg" => Ok(ReportFormat::Svg),
            other => Err(Error::InvalidConfig(format!("unknown report format `{other}`"))),
        }
    }
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{:.2}%", 100.0 * v))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// Markdown table in the column order algorithm, CV accuracy (mean, sd),
/// CV kappa (mean, sd), test accuracy.
pub fn render_markdown(report: &BenchmarkReport) -> String {
    let m = &report.meta;
    let mut s = String::new();
    let _ = writeln!(s, "# Benchmark: {} ({})\n", m.variant, m.leakage_mode);
    let _ = writeln!(
        s,
        "Training rows: {} (before resampling: {}); test rows: {}; no-information rate (test): {}; seed: {}.\n",
        m.n_train,
        m.n_train_original,
        m.n_test,
        pct(Some(m.nir_test)),
        m.seed
    );
    if let Some(b) = m.baseline_accuracy {
        let _ = writeln!(s, "Baseline forest CV accuracy on all {} features: {}.\n", m.n_features_full, pct(Some(b)));
    }
    s.push_str("| Algorithm | CV Accuracy | CV Accuracy SD | CV Kappa | CV Kappa SD | Test Accuracy |\n");
    s.push_str("|---|---|---|---|---|---|\n");
    for r in &report.rows {
        let cv = r.cv.as_ref();
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} |",
            r.algorithm,
            pct(cv.map(|c| c.accuracy_mean)),
            cv.map_or_else(|| "n/a".into(), |c| format!("{:.4}", c.accuracy_sd)),
            cv.map_or_else(|| "n/a".into(), |c| format!("{:.4}", c.kappa_mean)),
            cv.map_or_else(|| "n/a".into(), |c| format!("{:.4}", c.kappa_sd)),
            pct(r.test_accuracy),
        );
    }
    let failed: Vec<&AlgorithmResult> = report.rows.iter().filter(|r| r.error.is_some()).collect();
    if !failed.is_empty() {
        s.push_str("\nFailed:\n");
        for r in failed {
            let _ = writeln!(s, "- {}: {}", r.algorithm, r.error.as_deref().unwrap_or_default());
        }
    }
    if m.leakage_mode == LeakageMode::PaperReplication && m.variant != "original" {
        s.push_str("\nNote: resampling was applied before cross-validation, so CV estimates are optimistic.\n");
    }
    s
}

pub fn render_csv(report: &BenchmarkReport) -> String {
    let mut s = String::from(
        "algorithm,cv_accuracy_mean,cv_accuracy_sd,cv_kappa_mean,cv_kappa_sd,test_accuracy,test_kappa,converged,status\n",
    );
    for r in &report.rows {
        let cv = r.cv.as_ref();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.algorithm,
            opt(cv.map(|c| c.accuracy_mean)),
            opt(cv.map(|c| c.accuracy_sd)),
            opt(cv.map(|c| c.kappa_mean)),
            opt(cv.map(|c| c.kappa_sd)),
            opt(r.test_accuracy),
            opt(r.test_kappa),
            r.converged,
            if r.error.is_some() { "failed" } else { "ok" }
        );
    }
    s
}

pub fn render_cv_records(report: &BenchmarkReport) -> String {
    let mut s = String::from("algorithm,rep,fold,accuracy,kappa\n");
    for r in &report.records {
        let _ = writeln!(s, "{},{},{},{},{}", r.algorithm, r.rep, r.fold, r.accuracy, r.kappa);
    }
    s
}

pub fn render_run_meta(report: &BenchmarkReport) -> String {
    let m = &report.meta;
    let pairs: Vec<(&str, String)> = vec![
        ("variant", m.variant.clone()),
        ("leakage_mode", m.leakage_mode.to_string()),
        ("seed", m.seed.to_string()),
        ("split_ratio", m.split_ratio.to_string()),
        ("folds", m.folds.to_string()),
        ("reps", m.reps.to_string()),
        ("n_full", m.n_full.to_string()),
        ("n_features_full", m.n_features_full.to_string()),
        ("n_train_original", m.n_train_original.to_string()),
        ("n_train", m.n_train.to_string()),
        ("n_test", m.n_test.to_string()),
        ("nir_full", m.nir_full.to_string()),
        ("nir_test", m.nir_test.to_string()),
        ("selected_features", m.selected_features.join(";")),
        ("baseline_accuracy", opt(m.baseline_accuracy)),
        ("wall_clock_secs", format!("{:.3}", m.wall_clock_secs)),
    ];
    let mut s = String::from("key,value\n");
    for (k, v) in pairs {
        let _ = writeln!(s, "{k},{v}");
    }
    s
}

/// Per-algorithm CV accuracies as dots with a mean ± sd interval.
pub fn render_svg_chart(report: &BenchmarkReport) -> String {
    let ok: Vec<&AlgorithmResult> = report.rows.iter().filter(|r| r.cv.is_some()).collect();
    let accs = report.records.iter().map(|r| r.accuracy);
    let lo = accs.clone().fold(1.0f64, f64::min).min(1.0);
    let hi = accs.fold(0.0f64, f64::max).max(lo + 1e-9);
    let (left, plot_w, row_h, top) = (90.0, 420.0, 36.0, 40.0);
    let x = |v: f64| left + plot_w * (v - lo) / (hi - lo);
    let height = top + row_h * ok.len() as f64 + 40.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{height}" font-family="sans-serif" font-size="12">"#,
        left + plot_w + 30.0
    );
    let _ = writeln!(
        s,
        r#"<text x="10" y="20" font-weight="bold">CV accuracy ({}, {})</text>"#,
        xml_escape(&report.meta.variant),
        report.meta.leakage_mode
    );
    for (i, r) in ok.iter().enumerate() {
        let cy = top + row_h * i as f64 + row_h / 2.0;
        let cv = r.cv.as_ref().expect("filtered");
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, left - 8.0, cy + 4.0, r.algorithm);
        for rec in report.records.iter().filter(|c| c.algorithm == r.algorithm) {
            let _ = writeln!(
                s,
                r##"<circle cx="{:.2}" cy="{cy:.1}" r="2.5" fill="#9ecae9" fill-opacity="0.7"/>"##,
                x(rec.accuracy)
            );
        }
        let (a, b) = (
            x((cv.accuracy_mean - cv.accuracy_sd).max(lo)),
            x((cv.accuracy_mean + cv.accuracy_sd).min(hi)),
        );
        let _ = writeln!(
            s,
            r##"<line x1="{a:.2}" y1="{cy:.1}" x2="{b:.2}" y2="{cy:.1}" stroke="#1f4e79" stroke-width="2"/>"##
        );
        let _ = writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{cy:.1}" r="4.5" fill="#1f4e79"/>"##,
            x(cv.accuracy_mean)
        );
    }
    let axis_y = top + row_h * ok.len() as f64 + 10.0;
    let _ = writeln!(
        s,
        r##"<line x1="{left}" y1="{axis_y:.1}" x2="{:.1}" y2="{axis_y:.1}" stroke="#333"/>"##,
        left + plot_w
    );
    for (v, anchor) in [(lo, "start"), (hi, "end")] {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="{anchor}">{:.1}%</text>"#,
            x(v),
            axis_y + 16.0,
            100.0 * v
        );
    }
    s.push_str("</svg>\n");
    s
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))
}

/// Writes the files of the requested formats into `dir`:
/// markdown → `report.md`; csv → `report.csv`, `cv_records.csv`,
/// `run_meta.csv`, `importance.csv`; svg → `report.svg`, `importance.svg`.
pub fn emit_report(report: &BenchmarkReport, dir: &Path, formats: &[ReportFormat]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for format in formats {
        match format {
            ReportFormat::Markdown => write_file(dir, "report.md", &render_markdown(report))?,
            ReportFormat::Csv => {
                write_file(dir, "report.csv", &render_csv(report))?;
                write_file(dir, "cv_records.csv", &render_cv_records(report))?;
                write_file(dir, "run_meta.csv", &render_run_meta(report))?;
                if let Some(r) = &report.ranking {
                    let mut buf = Vec::new();
                    r.write_csv(&mut buf)?;
                    write_file(dir, "importance.csv", &String::from_utf8_lossy(&buf))?;
                }
            }
            ReportFormat::Svg => {
                write_file(dir, "report.svg", &render_svg_chart(report))?;
                if let Some(r) = &report.ranking {
                    write_file(dir, "importance.svg", &r.to_svg(r.len().min(30), "Variable importance"))?;
                }
            }
        }
    }
    Ok(())
}

pub const ALL_FORMATS: [ReportFormat; 3] = [ReportFormat::Markdown, ReportFormat::Csv, ReportFormat::Svg];

/// Saves the report as `report.json` so it can be re-rendered later.
pub fn save_report(report: &BenchmarkReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(dir, "report.json", &serde_json::to_string_pretty(report)?)
}

pub fn load_report(path: &Path) -> Result<BenchmarkReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
