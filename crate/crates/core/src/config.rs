//! Benchmark configuration and its line-oriented file format.
//!
//! ```text
//! # top-level keys
//! input = data/mies.csv
//! seed = 42
//! models = gbm, rf, knn
//!
//! [resample]
//! method = smote
//! k = 5
//!
//! [rf]
//! n_trees = 500
//! ```
//!
//! Blank lines and lines starting with `#` or `;` are ignored. Values are
//! taken verbatim after trimming; there is no quoting.

use std::path::PathBuf;
use std::str::FromStr;

use log::warn;

use crate::error::{Error, Result};
use crate::ingest::SynthSpec;
use crate::models::{Algorithm, Hyperparameters};
use crate::resample::{ResampleConfig, ResampleMethod};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeakageMode {
    /// Resample the whole training set, then cross-validate on it.
    #[default]
    PaperReplication,
    /// Resample inside each fold's training portion only.
    LeakFree,
}

impl std::fmt::Display for LeakageMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LeakageMode::PaperReplication => "paper_replication",
            LeakageMode::LeakFree => "leak_free",
        })
    }
}

impl FromStr for LeakageMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "paper_replication" | "paper" => Ok(LeakageMode::PaperReplication),
            "leak_free" => Ok(LeakageMode::LeakFree),
            other => Err(Error::InvalidConfig(format!("unknown leakage mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    /// Raw survey export or canonical CSV.
    Csv(PathBuf),
    Synthetic(SynthSpec),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub source: DataSource,
    pub split_ratio: f64,
    pub folds: usize,
    pub reps: usize,
    pub baseline_reps: usize,
    pub top_k: usize,
    pub resample: ResampleConfig,
    pub leakage_mode: LeakageMode,
    pub algorithms: Vec<Algorithm>,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Worker threads; `None` uses every core.
    pub threads: Option<usize>,
    pub hyper: Hyperparameters,
    /// Precomputed ranking (`rank,feature,raw,normalized`) to skip the baseline.
    pub importance_cache: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            source: DataSource::Csv(PathBuf::from("data.csv")),
            split_ratio: 0.85,
            folds: 10,
            reps: 10,
            baseline_reps: 2,
            top_k: 10,
            resample: ResampleConfig::default(),
            leakage_mode: LeakageMode::PaperReplication,
            algorithms: Algorithm::ALL.to_vec(),
            seed: 42,
            out_dir: PathBuf::from("out"),
            threads: None,
            hyper: Hyperparameters::default(),
            importance_cache: None,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::InvalidRatio(self.split_ratio));
        }
        if self.folds < 2 {
            return bad("folds must be at least 2");
        }
        if self.reps == 0 || self.baseline_reps == 0 {
            return bad("reps and baseline_reps must be positive");
        }
        if self.top_k == 0 {
            return bad("top_k must be positive");
        }
        if self.threads == Some(0) {
            return bad("threads must be positive");
        }
        if let DataSource::Synthetic(spec) = &self.source {
            spec.validate()?;
        }
        self.resample.validate()?;
        for &a in &self.algorithms {
            self.hyper.validate(a)?;
        }
        if self.leakage_mode == LeakageMode::PaperReplication && self.resample.method != ResampleMethod::None {
            warn!("paper_replication resamples before cross-validation; CV estimates will be optimistic");
        }
        Ok(())
    }

    /// Parses the config file format, starting from defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Applies `key = value` settings from `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut section = String::new();
        let mut synth: Option<SynthSpec> = match &self.source {
            DataSource::Synthetic(s) => Some(s.clone()),
            DataSource::Csv(_) => None,
        };
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_ascii_lowercase();
                if section == "synthetic" && synth.is_none() {
                    synth = Some(default_synth());
                }
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let (key, value) = (key.trim().to_ascii_lowercase(), value.trim());
            let ctx = |e: Error| Error::InvalidConfig(format!("line {}: [{section}] {key}: {e}", lineno + 1));
            match section.as_str() {
                "synthetic" => set_synth(synth.as_mut().expect("created on header"), &key, value),
                _ => self.set(&section, &key, value),
            }
            .map_err(ctx)?;
        }
        if let Some(spec) = synth {
            self.source = DataSource::Synthetic(spec);
        }
        Ok(())
    }

    fn set(&mut self, section: &str, key: &str, value: &str) -> Result<()> {
        let h = &mut self.hyper;
        match (section, key) {
            ("", "input") => self.source = DataSource::Csv(PathBuf::from(value)),
            ("", "seed") => self.seed = num(value)?,
            ("", "split") | ("", "split_ratio") => self.split_ratio = num(value)?,
            ("", "folds") => self.folds = num(value)?,
            ("", "reps") => self.reps = num(value)?,
            ("", "baseline_reps") => self.baseline_reps = num(value)?,
            ("", "top_k") => self.top_k = num(value)?,
            ("", "models") | ("", "algorithms") => self.algorithms = parse_algorithms(value)?,
            ("", "out") | ("", "out_dir") => self.out_dir = PathBuf::from(value),
            ("", "threads") => self.threads = Some(num(value)?),
            ("", "leakage_mode") => self.leakage_mode = value.parse()?,
            ("", "importance") | ("", "importance_cache") => self.importance_cache = Some(PathBuf::from(value)),
            ("resample", "method") => self.resample.method = value.parse()?,
            ("resample", "k") | ("resample", "k_neighbors") => self.resample.k_neighbors = num(value)?,
            ("resample", "beta") => self.resample.beta = num(value)?,
            ("knn", "k") => h.knn.k = num(value)?,
            ("rf", "n_trees") => h.rf.n_trees = num(value)?,
            ("rf", "mtry") => h.rf.mtry = Some(num(value)?),
            ("rf", "min_leaf") => h.rf.min_leaf = num(value)?,
            ("rf", "max_depth") => h.rf.max_depth = Some(num(value)?),
            ("rf", "bootstrap") => h.rf.bootstrap = num(value)?,
            ("gbm", "n_trees") => h.gbm.n_trees = num(value)?,
            ("gbm", "depth") => h.gbm.depth = num(value)?,
            ("gbm", "learning_rate") | ("gbm", "shrinkage") => h.gbm.learning_rate = num(value)?,
            ("gbm", "min_leaf") => h.gbm.min_leaf = num(value)?,
            ("nnet", "hidden") | ("nnet", "size") => h.nnet.hidden = num(value)?,
            ("nnet", "weight_decay") | ("nnet", "decay") => h.nnet.weight_decay = num(value)?,
            ("nnet", "max_iter") => h.nnet.max_iter = num(value)?,
            ("svm", "c") | ("svm", "cost") => h.svm.c = num(value)?,
            ("svm", "gamma") | ("svm", "sigma") => h.svm.gamma = Some(num(value)?),
            ("svm", "tol") => h.svm.tol = num(value)?,
            ("svm", "max_passes") => h.svm.max_passes = num(value)?,
            _ => return Err(Error::InvalidConfig("unknown key".into())),
        }
        Ok(())
    }
}

fn default_synth() -> SynthSpec {
    SynthSpec {
        n: 1000,
        p: 20,
        c: 3,
        class_proportions: vec![0.6, 0.3, 0.1],
        informative_features: vec![0, 1, 2, 3, 4],
        effect_size: 0.8,
        seed: 1,
    }
}

fn set_synth(spec: &mut SynthSpec, key: &str, value: &str) -> Result<()> {
    match key {
        "n" => spec.n = num(value)?,
        "p" => spec.p = num(value)?,
        "c" => spec.c = num(value)?,
        "proportions" | "class_proportions" => spec.class_proportions = list(value)?,
        "informative" | "informative_features" => spec.informative_features = list(value)?,
        "effect" | "effect_size" => spec.effect_size = num(value)?,
        "seed" => spec.seed = num(value)?,
        _ => return Err(Error::InvalidConfig("unknown key".into())),
    }
    Ok(())
}

fn num<T: FromStr>(value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("cannot parse `{value}`")))
}

fn list<T: FromStr>(value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(num)
        .collect()
}

/// Parses a comma-separated algorithm list, dropping duplicates.
pub fn parse_algorithms(value: &str) -> Result<Vec<Algorithm>> {
    let mut out = Vec::new();
    for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let a: Algorithm = part.parse()?;
        if !out.contains(&a) {
            out.push(a);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_overrides() {
        let cfg = BenchConfig::parse(
            "# comment\ninput = a.csv\nseed = 7\nmodels = rf, svm\nleakage_mode = leak-free\n\n\
             [resample]\nmethod = adasyn\nbeta = 0.5\n[rf]\nn_trees = 50\n[svm]\nc = 2.5\n",
        )
        .unwrap();
        assert_eq!(cfg.source, DataSource::Csv("a.csv".into()));
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.algorithms, [Algorithm::Rf, Algorithm::SvmRbf]);
        assert_eq!(cfg.leakage_mode, LeakageMode::LeakFree);
        assert_eq!(cfg.resample.method, ResampleMethod::Adasyn);
        assert_eq!(cfg.resample.beta, 0.5);
        assert_eq!(cfg.hyper.rf.n_trees, 50);
        assert_eq!(cfg.hyper.svm.c, 2.5);
        assert_eq!(cfg.folds, 10);
        cfg.validate().unwrap();
    }

    #[test]
    fn synthetic_section() {
        let cfg = BenchConfig::parse("[synthetic]\nn = 300\np = 12\nc = 2\nproportions = 0.7, 0.3\ninformative = 0,1\n").unwrap();
        let DataSource::Synthetic(s) = &cfg.source else { panic!() };
        assert_eq!((s.n, s.p, s.c), (300, 12, 2));
        assert_eq!(s.informative_features, [0, 1]);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(BenchConfig::parse("seed 7").is_err());
        assert!(BenchConfig::parse("colour = red").is_err());
        assert!(BenchConfig::parse("[rf]\nn_trees = many").is_err());
        let mut cfg = BenchConfig::parse("split = 1.5").unwrap();
        assert!(cfg.validate().is_err());
        cfg.split_ratio = 0.8;
        cfg.folds = 1;
        assert!(cfg.validate().is_err());
    }
}
