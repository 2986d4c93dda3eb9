//! Multinomial gradient boosting with regression trees.
//!
//! One score function per class, initialised to the log class prior. Each
//! round takes the softmax of the current scores, fits one squared-error
//! tree per class to the residual `y_ik - p_ik`, and sets each leaf to the
//! one-step Newton value
//! `(K-1)/K * sum(r) / sum(|r| (1 - |r|))`.
//! The round is applied with the learning rate as step. If that step would
//! raise the training deviance it is halved until it does not; the update
//! direction is always a descent direction, so deviance never increases.

use serde::{Deserialize, Serialize};

use super::cart::{Binned, Target, Tree, TreeGrower, TreeParams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbmParams {
    pub n_trees: usize,
    pub depth: usize,
    pub learning_rate: f64,
    pub min_leaf: usize,
}

impl Default for GbmParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            depth: 3,
            learning_rate: 0.1,
            min_leaf: 10,
        }
    }
}

const PRIOR_FLOOR: f64 = 1e-12;
const MAX_HALVINGS: usize = 40;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbmRound {
    /// One tree per class.
    pub trees: Vec<Tree>,
    /// Multiplier actually applied to the leaf values.
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbmModel {
    init: Vec<f64>,
    rounds: Vec<GbmRound>,
    importance: Vec<f64>,
    /// Training deviance after initialisation and after each round.
    deviance: Vec<f64>,
}

fn softmax_into(scores: &[f64], out: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &s) in out.iter_mut().zip(scores) {
        *o = (s - max).exp();
        sum += *o;
    }
    out.iter_mut().for_each(|o| *o /= sum);
}

/// Multinomial deviance `-2 * sum_i log p_{i, y_i}` for row-major scores.
pub fn multinomial_deviance(scores: &[f64], labels: &[usize], c: usize) -> f64 {
    scores
        .chunks_exact(c)
        .zip(labels)
        .map(|(s, &y)| {
            let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + s.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            -2.0 * (s[y] - lse)
        })
        .sum()
}

impl GbmModel {
    pub fn fit(matrix: &[f64], p: usize, labels: &[usize], n_classes: usize, params: &GbmParams) -> Self {
        let binned = Binned::new(matrix, p);
        let n = binned.n();
        let c = n_classes;
        let mut counts = vec![0.0; c];
        for &l in labels {
            counts[l] += 1.0;
        }
        let init: Vec<f64> = counts
            .iter()
            .map(|&k| (k / n as f64).max(PRIOR_FLOOR).ln())
            .collect();
        let mut scores: Vec<f64> = (0..n).flat_map(|_| init.iter().copied()).collect();
        let mut deviance = vec![multinomial_deviance(&scores, labels, c)];
        let mut importance = vec![0.0; p];
        let mut rounds = Vec::with_capacity(params.n_trees);
        let tree_params = TreeParams {
            max_depth: Some(params.depth),
            min_leaf: params.min_leaf,
            mtry: None,
        };
        let newton = (c as f64 - 1.0) / c as f64;
        let mut prob = vec![0.0; n * c];
        let mut residual = vec![0.0; n];
        for _ in 0..params.n_trees {
            for (s, pr) in scores.chunks_exact(c).zip(prob.chunks_exact_mut(c)) {
                softmax_into(s, pr);
            }
            let mut trees = Vec::with_capacity(c);
            let mut round_importance = vec![0.0; p];
            let mut update = vec![0.0; n * c];
            for k in 0..c {
                for i in 0..n {
                    let y = if labels[i] == k { 1.0 } else { 0.0 };
                    residual[i] = y - prob[i * c + k];
                }
                let r = &residual;
                let leaf = |rows: &[usize], _: &[f64]| {
                    let num: f64 = rows.iter().map(|&i| r[i]).sum();
                    let den: f64 = rows.iter().map(|&i| r[i].abs() * (1.0 - r[i].abs())).sum();
                    let gamma = if den < 1e-300 { 0.0 } else { newton * num / den };
                    vec![gamma]
                };
                let mut rows: Vec<usize> = (0..n).collect();
                let (tree, imp) =
                    TreeGrower::new(&binned, Target::Values(r), tree_params, leaf).grow(&mut rows, None);
                for (a, b) in round_importance.iter_mut().zip(&imp) {
                    *a += b;
                }
                for i in 0..n {
                    update[i * c + k] = tree.leaf(&matrix[i * p..(i + 1) * p])[0];
                }
                trees.push(tree);
            }
            let previous = *deviance.last().expect("initial deviance");
            let mut step = params.learning_rate;
            let mut accepted = None;
            for _ in 0..=MAX_HALVINGS {
                let trial: Vec<f64> = scores.iter().zip(&update).map(|(s, u)| s + step * u).collect();
                let d = multinomial_deviance(&trial, labels, c);
                if d <= previous {
                    accepted = Some((trial, d));
                    break;
                }
                step /= 2.0;
            }
            let (new_scores, d) = accepted.unwrap_or_else(|| {
                step = 0.0;
                (scores.clone(), previous)
            });
            scores = new_scores;
            deviance.push(d);
            if step > 0.0 {
                for (a, b) in importance.iter_mut().zip(&round_importance) {
                    *a += b;
                }
            }
            rounds.push(GbmRound { trees, step });
        }
        Self {
            init,
            rounds,
            importance,
            deviance,
        }
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let mut f = self.init.clone();
        for round in &self.rounds {
            if round.step == 0.0 {
                continue;
            }
            for (fk, tree) in f.iter_mut().zip(&round.trees) {
                *fk += round.step * tree.leaf(x)[0];
            }
        }
        f
    }

    pub fn proba(&self, x: &[f64]) -> Vec<f64> {
        let s = self.scores(x);
        let mut out = vec![0.0; s.len()];
        softmax_into(&s, &mut out);
        out
    }

    /// Squared-error reduction per feature, summed over all trees.
    pub fn importance(&self) -> &[f64] {
        &self.importance
    }

    pub fn deviance_trace(&self) -> &[f64] {
        &self.deviance
    }
}
