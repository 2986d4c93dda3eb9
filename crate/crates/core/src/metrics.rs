//! Confusion matrices, accuracy, Cohen's kappa and CV aggregation.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::util::mean_sd;

/// Square count matrix; rows are true classes, columns predictions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    c: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn zeros(c: usize) -> Self {
        Self {
            c,
            counts: vec![0; c * c],
        }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Self {
        let c = rows.len();
        assert!(rows.iter().all(|r| r.len() == c), "confusion matrix must be square");
        Self {
            c,
            counts: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_predictions(truth: &[usize], predicted: &[usize], c: usize) -> Self {
        assert_eq!(truth.len(), predicted.len());
        let mut cm = Self::zeros(c);
        for (&t, &p) in truth.iter().zip(predicted) {
            cm.counts[t * c + p] += 1;
        }
        cm
    }

    pub fn n_classes(&self) -> usize {
        self.c
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.c + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.c).map(|i| self.get(i, i)).sum()
    }

    pub fn row_sum(&self, truth: usize) -> u64 {
        (0..self.c).map(|j| self.get(truth, j)).sum()
    }

    pub fn col_sum(&self, predicted: usize) -> u64 {
        (0..self.c).map(|i| self.get(i, predicted)).sum()
    }

    /// Same matrix with classes relabelled: new class `i` is old `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut out = Self::zeros(self.c);
        for i in 0..self.c {
            for j in 0..self.c {
                out.counts[i * self.c + j] = self.get(perm[i], perm[j]);
            }
        }
        out
    }
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyMatrix);
    }
    Ok(cm.trace() as f64 / total as f64)
}

/// Cohen's kappa. Returns 0 when chance agreement is already 1, which only
/// happens when a single class appears in both truth and predictions.
pub fn kappa(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyMatrix);
    }
    let n = total as f64;
    let observed = cm.trace() as f64 / n;
    let expected: f64 = (0..cm.n_classes())
        .map(|j| cm.row_sum(j) as f64 * cm.col_sum(j) as f64)
        .sum::<f64>()
        / (n * n);
    if expected >= 1.0 {
        return Ok(0.0);
    }
    Ok((observed - expected) / (1.0 - expected))
}

/// Accuracy of always predicting the majority class.
pub fn no_information_rate(ds: &Dataset) -> Result<f64> {
    if ds.n() == 0 {
        return Err(Error::InvalidDataset("no rows".into()));
    }
    Ok(ds.class_distribution().majority_proportion())
}

/// Score of one (repetition, fold) evaluation cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub rep: usize,
    pub fold: usize,
    pub accuracy: f64,
    pub kappa: f64,
}

impl EvalRecord {
    pub fn from_confusion(rep: usize, fold: usize, cm: &ConfusionMatrix) -> Result<Self> {
        Ok(Self {
            rep,
            fold,
            accuracy: accuracy(cm)?,
            kappa: kappa(cm)?,
        })
    }
}

/// Mean and sample standard deviation of accuracy and kappa.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub accuracy_mean: f64,
    pub accuracy_sd: f64,
    pub kappa_mean: f64,
    pub kappa_sd: f64,
    pub cells: usize,
}

pub fn aggregate(records: &[EvalRecord]) -> Result<CvSummary> {
    if records.is_empty() {
        return Err(Error::InvalidConfig("cannot aggregate zero records".into()));
    }
    let acc: Vec<f64> = records.iter().map(|r| r.accuracy).collect();
    let kap: Vec<f64> = records.iter().map(|r| r.kappa).collect();
    let (accuracy_mean, accuracy_sd) = mean_sd(&acc);
    let (kappa_mean, kappa_sd) = mean_sd(&kap);
    Ok(CvSummary {
        accuracy_mean,
        accuracy_sd,
        kappa_mean,
        kappa_sd,
        cells: records.len(),
    })
}
