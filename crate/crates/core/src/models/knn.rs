use serde::{Deserialize, Serialize};

use crate::neighbors::nearest;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 7 }
    }
}

/// Majority vote among the `k` Euclidean-nearest training rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    k: usize,
    p: usize,
    n_classes: usize,
    matrix: Vec<f64>,
    labels: Vec<usize>,
}

impl KnnModel {
    pub fn fit(matrix: &[f64], p: usize, labels: &[usize], n_classes: usize, k: usize) -> Self {
        Self {
            k,
            p,
            n_classes,
            matrix: matrix.to_vec(),
            labels: labels.to_vec(),
        }
    }

    /// Training rows nearest to `x`, nearest first.
    pub fn neighbours(&self, x: &[f64]) -> Vec<usize> {
        nearest(&self.matrix, self.p, x, self.k, |_| true)
            .into_iter()
            .map(|(_, i)| i)
            .collect()
    }

    /// Vote fractions.
    pub fn proba(&self, x: &[f64]) -> Vec<f64> {
        let mut votes = vec![0.0; self.n_classes];
        let nb = self.neighbours(x);
        for &i in &nb {
            votes[self.labels[i]] += 1.0;
        }
        let k = nb.len() as f64;
        votes.iter_mut().for_each(|v| *v /= k);
        votes
    }
}
