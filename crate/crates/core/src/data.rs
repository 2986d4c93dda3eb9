//! Dataset representation shared by every stage of the pipeline.
//!
//! A [`Dataset`] is a dense row-major feature matrix plus class labels and
//! per-feature descriptors. It is never mutated after construction; every
//! transformation (feature selection, row subsetting, resampling) returns a
//! new value.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Range of a Likert answer. 0 is the raw-file code for "unanswered".
pub const LIKERT_RANGE: (i64, i64) = (0, 5);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Likert,
    DemographicBinary,
    DemographicCategorical,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub name: String,
    pub kind: FeatureKind,
}

impl FeatureDescriptor {
    pub fn new(name: impl Into<String>, kind: FeatureKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }

    pub fn likert(name: impl Into<String>) -> Self {
        Self::new(name, FeatureKind::Likert)
    }

    /// Inclusive valid interval, defined only for Likert items.
    pub fn valid_range(&self) -> Option<(i64, i64)> {
        match self.kind {
            FeatureKind::Likert => Some(LIKERT_RANGE),
            _ => None,
        }
    }
}

/// Per-class row counts and their proportions.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassDistribution {
    pub counts: Vec<usize>,
    pub proportions: Vec<f64>,
}

impl ClassDistribution {
    pub fn from_labels(labels: &[usize], n_classes: usize) -> Self {
        let mut counts = vec![0usize; n_classes];
        for &l in labels {
            counts[l] += 1;
        }
        let total = labels.len();
        let proportions = counts
            .iter()
            .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
            .collect();
        Self {
            counts,
            proportions,
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Index of the most frequent class; ties go to the lowest index.
    pub fn majority(&self) -> usize {
        let mut best = 0;
        for (i, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = i;
            }
        }
        best
    }

    pub fn majority_proportion(&self) -> f64 {
        self.proportions
            .get(self.majority())
            .copied()
            .unwrap_or(0.0)
    }
}

/// Immutable labelled feature matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Vec<FeatureDescriptor>,
    matrix: Vec<f64>,
    labels: Vec<usize>,
    class_names: Vec<String>,
}

impl Dataset {
    /// Builds and validates a dataset. `matrix` is row-major with
    /// `labels.len()` rows and `features.len()` columns.
    ///
    /// Likert columns must hold finite values inside [`LIKERT_RANGE`]; they
    /// are not required to be integral because oversampled rows are
    /// interpolated. Integrality of raw answers is enforced at ingest.
    pub fn new(
        features: Vec<FeatureDescriptor>,
        matrix: Vec<f64>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let p = features.len();
        if p == 0 {
            return Err(Error::InvalidDataset("no features".into()));
        }
        // An empty dataset (every row filtered out) may carry no classes.
        if class_names.len() < 2 && !labels.is_empty() {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 classes, got {}",
                class_names.len()
            )));
        }
        if matrix.len() != labels.len() * p {
            return Err(Error::InvalidDataset(format!(
                "matrix has {} cells, expected {} rows x {} features",
                matrix.len(),
                labels.len(),
                p
            )));
        }
        let mut seen = HashSet::with_capacity(p);
        for f in &features {
            if !seen.insert(f.name.as_str()) {
                return Err(Error::InvalidDataset(format!(
                    "duplicate feature name `{}`",
                    f.name
                )));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::InvalidDataset(format!(
                "label {bad} out of range for {} classes",
                class_names.len()
            )));
        }
        for (idx, &v) in matrix.iter().enumerate() {
            let f = &features[idx % p];
            if !v.is_finite() {
                return Err(Error::InvalidDataset(format!(
                    "non-finite value in row {} feature `{}`",
                    idx / p,
                    f.name
                )));
            }
            if let Some((lo, hi)) = f.valid_range() {
                if v < lo as f64 || v > hi as f64 {
                    return Err(Error::InvalidDataset(format!(
                        "value {v} outside [{lo},{hi}] in row {} feature `{}`",
                        idx / p,
                        f.name
                    )));
                }
            }
        }
        Ok(Self {
            features,
            matrix,
            labels,
            class_names,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn p(&self) -> usize {
        self.features.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn features(&self) -> &[FeatureDescriptor] {
        &self.features
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, row: usize) -> usize {
        self.labels[row]
    }

    /// Row-major backing storage.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.p();
        &self.matrix[i * p..(i + 1) * p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.matrix.chunks_exact(self.p())
    }

    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.matrix[row * self.p() + feature]
    }

    pub fn column(&self, feature: usize) -> Vec<f64> {
        self.rows().map(|r| r[feature]).collect()
    }

    pub fn class_distribution(&self) -> ClassDistribution {
        ClassDistribution::from_labels(&self.labels, self.n_classes())
    }

    /// Projects onto `names`, in the given order.
    pub fn select_features<S: AsRef<str>>(&self, names: &[S]) -> Result<Dataset> {
        let idx = names
            .iter()
            .map(|n| {
                self.feature_index(n.as_ref())
                    .ok_or_else(|| Error::UnknownFeature(n.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let features: Vec<_> = idx.iter().map(|&j| self.features[j].clone()).collect();
        let mut matrix = Vec::with_capacity(self.n() * idx.len());
        for row in self.rows() {
            matrix.extend(idx.iter().map(|&j| row[j]));
        }
        Dataset::new(
            features,
            matrix,
            self.labels.clone(),
            self.class_names.clone(),
        )
    }

    /// Rows at `indices`, in that order (duplicates allowed).
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut matrix = Vec::with_capacity(indices.len() * self.p());
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            matrix.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            features: self.features.clone(),
            matrix,
            labels,
            class_names: self.class_names.clone(),
        }
    }

    /// Copy with column `feature` replaced by `values`.
    pub(crate) fn with_column(&self, feature: usize, values: &[f64]) -> Dataset {
        let p = self.p();
        let mut matrix = self.matrix.clone();
        for (i, &v) in values.iter().enumerate() {
            matrix[i * p + feature] = v;
        }
        Dataset {
            matrix,
            ..self.clone()
        }
    }

    /// Copy with extra rows appended after the existing ones.
    pub(crate) fn with_appended(&self, rows: Vec<f64>, labels: Vec<usize>) -> Dataset {
        debug_assert_eq!(rows.len(), labels.len() * self.p());
        let mut matrix = Vec::with_capacity(self.matrix.len() + rows.len());
        matrix.extend_from_slice(&self.matrix);
        matrix.extend(rows);
        let mut all_labels = self.labels.clone();
        all_labels.extend(labels);
        Dataset {
            features: self.features.clone(),
            matrix,
            labels: all_labels,
            class_names: self.class_names.clone(),
        }
    }
}

pub fn class_distribution(ds: &Dataset) -> ClassDistribution {
    ds.class_distribution()
}
