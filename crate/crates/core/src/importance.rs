//! Variable-importance rankings, top-k selection and ranking comparison.
//!
//! A ranking is sorted by raw score, highest first, with ties broken by
//! feature name so that the order (and therefore top-k selection) never
//! depends on feature position. Normalised scores are `100 * raw / max_raw`.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cv;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::metrics::EvalRecord;
use crate::models::{Algorithm, ModelConfig, TrainedModel};
use crate::seed;
use crate::split::repeated_stratified_kfold;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportanceSource {
    RfGini,
    GbmInfluence,
    Permutation,
}

impl fmt::Display for ImportanceSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ImportanceSource::RfGini => "rf_gini",
            ImportanceSource::GbmInfluence => "gbm_influence",
            ImportanceSource::Permutation => "permutation",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub feature: String,
    pub raw: f64,
    pub normalized: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRanking {
    entries: Vec<ImportanceEntry>,
    source: ImportanceSource,
}

impl ImportanceRanking {
    /// Builds a ranking from raw scores given in feature order.
    pub fn from_scores<S: AsRef<str>>(names: &[S], raw: &[f64], source: ImportanceSource) -> Self {
        assert_eq!(names.len(), raw.len(), "one score per feature");
        let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut entries: Vec<ImportanceEntry> = names
            .iter()
            .zip(raw)
            .map(|(name, &r)| ImportanceEntry {
                feature: name.as_ref().to_string(),
                raw: r,
                normalized: if max > 0.0 { 100.0 * (r / max) } else { 0.0 },
            })
            .collect();
        entries.sort_by(|a, b| b.raw.total_cmp(&a.raw).then_with(|| a.feature.cmp(&b.feature)));
        Self { entries, source }
    }

    pub fn entries(&self) -> &[ImportanceEntry] {
        &self.entries
    }

    pub fn source(&self) -> ImportanceSource {
        self.source
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.feature.clone()).collect()
    }

    pub fn get(&self, feature: &str) -> Option<&ImportanceEntry> {
        self.entries.iter().find(|e| e.feature == feature)
    }

    /// 1-based rank of `feature`.
    pub fn rank_of(&self, feature: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.feature == feature).map(|i| i + 1)
    }

    /// Writes `rank,feature,raw,normalized`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rank", "feature", "raw", "normalized"])?;
        for (i, e) in self.entries.iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                e.feature.clone(),
                e.raw.to_string(),
                format!("{:.3}", e.normalized),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<output>", e))?;
        Ok(())
    }

    /// Reads a ranking written by [`write_csv`](Self::write_csv); only the
    /// feature and raw columns are used.
    pub fn read_csv<R: Read>(input: R, source: ImportanceSource) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::InvalidConfig(format!("importance file lacks `{name}` column")))
        };
        let (fi, ri) = (col("feature")?, col("raw")?);
        let mut names = Vec::new();
        let mut raw = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let value = &rec[ri];
            raw.push(value.parse::<f64>().map_err(|_| Error::InvalidCell {
                row: line,
                column: "raw".into(),
                value: value.into(),
            })?);
            names.push(rec[fi].to_string());
        }
        Ok(Self::from_scores(&names, &raw, source))
    }

    /// Horizontal bar chart of the first `top` entries' normalised scores.
    pub fn to_svg(&self, top: usize, title: &str) -> String {
        let shown = &self.entries[..top.min(self.entries.len())];
        let (label_w, bar_w, row_h, pad) = (140.0, 360.0, 22.0, 30.0);
        let width = label_w + bar_w + 70.0;
        let height = pad * 2.0 + row_h * shown.len() as f64;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<text x="{}" y="18" font-weight="bold">{}</text>"#, 10, xml_escape(title));
        for (i, e) in shown.iter().enumerate() {
            let y = pad + row_h * i as f64;
            let w = bar_w * e.normalized.clamp(0.0, 100.0) / 100.0;
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                label_w - 6.0,
                y + 15.0,
                xml_escape(&e.feature)
            );
            let _ = writeln!(
                s,
                r##"<rect x="{label_w:.1}" y="{:.1}" width="{w:.3}" height="{:.1}" fill="#4c78a8"/>"##,
                y + 3.0,
                row_h - 6.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}">{:.1}</text>"#,
                label_w + w + 4.0,
                y + 15.0,
                e.normalized
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

pub(crate) fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn source_of(algorithm: Algorithm) -> Result<ImportanceSource> {
    match algorithm {
        Algorithm::Rf => Ok(ImportanceSource::RfGini),
        Algorithm::Gbm => Ok(ImportanceSource::GbmInfluence),
        other => Err(Error::InvalidConfig(format!("{other} has no built-in importance"))),
    }
}

/// Importance averaged over the models of a repeated stratified k-fold run,
/// together with the per-cell scores of those models.
pub fn cv_importance_detailed(
    ds: &Dataset,
    cfg: &ModelConfig,
    k: usize,
    reps: usize,
) -> Result<(ImportanceRanking, Vec<EvalRecord>)> {
    let source = source_of(cfg.algorithm)?;
    let plan = repeated_stratified_kfold(ds.labels(), k, reps, seed::derive_str(cfg.seed, "importance-folds"))?;
    let cells = cv::run_cells(ds, &plan, cfg, None);
    let mut sum = vec![0.0; ds.p()];
    let mut records = Vec::with_capacity(cells.len());
    for cell in cells {
        let cell = cell?;
        if let Some(imp) = &cell.importance {
            for (s, v) in sum.iter_mut().zip(imp) {
                *s += v;
            }
        }
        records.push(cell.record);
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / records.len() as f64).collect();
    Ok((ImportanceRanking::from_scores(&ds.feature_names(), &mean, source), records))
}

/// Importance of `algorithm` (rf or gbm, default hyperparameters) averaged
/// over `k`-fold CV models repeated `reps` times.
pub fn cv_importance(ds: &Dataset, algorithm: Algorithm, k: usize, reps: usize, seed: u64) -> Result<ImportanceRanking> {
    cv_importance_detailed(ds, &ModelConfig::new(algorithm, seed), k, reps).map(|(r, _)| r)
}

fn holdout_accuracy(model: &TrainedModel, ds: &Dataset) -> f64 {
    let pred = model.predict(ds);
    let hits = pred.iter().zip(ds.labels()).filter(|(a, b)| a == b).count();
    hits as f64 / ds.n() as f64
}

/// Mean accuracy drop on `holdout` when each feature's column is shuffled,
/// over `n_shuffles` independent permutations.
pub fn permutation_importance(
    model: &TrainedModel,
    holdout: &Dataset,
    n_shuffles: usize,
    seed: u64,
) -> Result<ImportanceRanking> {
    if n_shuffles == 0 {
        return Err(Error::InvalidShuffles);
    }
    if holdout.n() == 0 {
        return Err(Error::EmptyInput);
    }
    let base = holdout_accuracy(model, holdout);
    let root = seed::derive_str(seed, "permutation");
    let drops: Vec<f64> = (0..holdout.p())
        .into_par_iter()
        .map(|j| {
            let column = holdout.column(j);
            let total: f64 = (0..n_shuffles)
                .map(|s| {
                    let mut rng = seed::rng(seed::derive(seed::derive(root, j as u64), s as u64));
                    let mut shuffled = column.clone();
                    shuffled.shuffle(&mut rng);
                    base - holdout_accuracy(model, &holdout.with_column(j, &shuffled))
                })
                .sum();
            total / n_shuffles as f64
        })
        .collect();
    Ok(ImportanceRanking::from_scores(
        &holdout.feature_names(),
        &drops,
        ImportanceSource::Permutation,
    ))
}

/// Names of the first `k` ranked features.
pub fn select_top_k(ranking: &ImportanceRanking, k: usize) -> Result<Vec<String>> {
    if k > ranking.len() {
        return Err(Error::KTooLarge {
            k,
            available: ranking.len(),
        });
    }
    Ok(ranking.entries[..k].iter().map(|e| e.feature.clone()).collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankingComparison {
    /// Features shared by both top-10 lists.
    pub top10_overlap: usize,
    /// Spearman correlation of the rank positions over all features.
    pub spearman: f64,
}

/// Compares two rankings over the same feature set.
pub fn compare_rankings(a: &ImportanceRanking, b: &ImportanceRanking) -> Result<RankingComparison> {
    let a_names: HashSet<&str> = a.entries.iter().map(|e| e.feature.as_str()).collect();
    let b_names: HashSet<&str> = b.entries.iter().map(|e| e.feature.as_str()).collect();
    if a_names != b_names || a.len() != b.len() {
        return Err(Error::UniverseMismatch);
    }
    let top = 10.min(a.len());
    let a_top: HashSet<&str> = a.entries[..top].iter().map(|e| e.feature.as_str()).collect();
    let top10_overlap = b.entries[..top]
        .iter()
        .filter(|e| a_top.contains(e.feature.as_str()))
        .count();
    let b_rank: HashMap<&str, usize> = b.entries.iter().enumerate().map(|(i, e)| (e.feature.as_str(), i)).collect();
    let n = a.len() as f64;
    let spearman = if a.len() < 2 {
        1.0
    } else {
        let d2: f64 = a
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let d = i as f64 - b_rank[e.feature.as_str()] as f64;
                d * d
            })
            .sum();
        1.0 - 6.0 * d2 / (n * (n * n - 1.0))
    };
    Ok(RankingComparison {
        top10_overlap,
        spearman,
    })
}

/// Range (max minus min) of the normalised scores of the first `k` entries.
pub fn normalized_spread(ranking: &ImportanceRanking, k: usize) -> f64 {
    let shown = &ranking.entries[..k.min(ranking.len())];
    let max = shown.iter().map(|e| e.normalized).fold(f64::NEG_INFINITY, f64::max);
    let min = shown.iter().map(|e| e.normalized).fold(f64::INFINITY, f64::min);
    if shown.is_empty() {
        0.0
    } else {
        max - min
    }
}
