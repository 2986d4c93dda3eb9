//! Single-hidden-layer network: logistic hidden units, softmax output,
//! cross-entropy loss with L2 weight decay on every weight (biases
//! included), trained by full-batch gradient descent with backtracking.
//!
//! Inputs are standardised with the training mean and sd; constant columns
//! map to 0.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightInit {
    /// Uniform in [-0.5, 0.5].
    #[default]
    Uniform,
    /// All zeros (test hook; the output is then uniform over classes).
    Zeros,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NnetParams {
    pub hidden: usize,
    pub weight_decay: f64,
    pub max_iter: usize,
    pub init: WeightInit,
}

impl Default for NnetParams {
    fn default() -> Self {
        Self {
            hidden: 5,
            weight_decay: 1e-4,
            max_iter: 500,
            init: WeightInit::Uniform,
        }
    }
}

/// Parameter layout: hidden weights `hidden x (p + 1)` (bias last), then
/// output weights `c x (hidden + 1)` (bias last).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
}

impl Shape {
    pub fn n_weights(&self) -> usize {
        self.hidden * (self.inputs + 1) + self.outputs * (self.hidden + 1)
    }

    fn split<'w>(&self, w: &'w [f64]) -> (&'w [f64], &'w [f64]) {
        w.split_at(self.hidden * (self.inputs + 1))
    }

    /// Hidden activations and class probabilities for one input row.
    fn forward(&self, w: &[f64], x: &[f64], hidden: &mut [f64], out: &mut [f64]) {
        let (w1, w2) = self.split(w);
        let stride1 = self.inputs + 1;
        for (h, a) in hidden.iter_mut().enumerate() {
            let row = &w1[h * stride1..(h + 1) * stride1];
            let z = row[self.inputs] + row[..self.inputs].iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            *a = 1.0 / (1.0 + (-z).exp());
        }
        let stride2 = self.hidden + 1;
        for (k, o) in out.iter_mut().enumerate() {
            let row = &w2[k * stride2..(k + 1) * stride2];
            *o = row[self.hidden] + row[..self.hidden].iter().zip(hidden.iter()).map(|(a, b)| a * b).sum::<f64>();
        }
        let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for o in out.iter_mut() {
            *o = (*o - max).exp();
            sum += *o;
        }
        out.iter_mut().for_each(|o| *o /= sum);
    }
}

/// Training objective over standardised inputs:
/// `sum_i -log p_{i, y_i} + decay * sum w^2`.
pub struct NnetObjective<'a> {
    pub shape: Shape,
    pub inputs: &'a [f64],
    pub labels: &'a [usize],
    pub decay: f64,
}

impl NnetObjective<'_> {
    pub fn loss(&self, w: &[f64]) -> f64 {
        let s = self.shape;
        let mut hidden = vec![0.0; s.hidden];
        let mut out = vec![0.0; s.outputs];
        let mut total = self.decay * w.iter().map(|v| v * v).sum::<f64>();
        for (x, &y) in self.inputs.chunks_exact(s.inputs).zip(self.labels) {
            s.forward(w, x, &mut hidden, &mut out);
            total -= out[y].max(f64::MIN_POSITIVE).ln();
        }
        total
    }

    /// Loss and its analytic gradient (backpropagation).
    pub fn loss_and_gradient(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let s = self.shape;
        let mut grad: Vec<f64> = w.iter().map(|v| 2.0 * self.decay * v).collect();
        let mut loss = self.decay * w.iter().map(|v| v * v).sum::<f64>();
        let (_, w2) = s.split(w);
        let n1 = s.hidden * (s.inputs + 1);
        let stride1 = s.inputs + 1;
        let stride2 = s.hidden + 1;
        let mut hidden = vec![0.0; s.hidden];
        let mut out = vec![0.0; s.outputs];
        let mut delta_hidden = vec![0.0; s.hidden];
        for (x, &y) in self.inputs.chunks_exact(s.inputs).zip(self.labels) {
            s.forward(w, x, &mut hidden, &mut out);
            loss -= out[y].max(f64::MIN_POSITIVE).ln();
            delta_hidden.iter_mut().for_each(|d| *d = 0.0);
            for k in 0..s.outputs {
                let d = out[k] - if k == y { 1.0 } else { 0.0 };
                let g2 = &mut grad[n1 + k * stride2..n1 + (k + 1) * stride2];
                for h in 0..s.hidden {
                    g2[h] += d * hidden[h];
                    delta_hidden[h] += d * w2[k * stride2 + h];
                }
                g2[s.hidden] += d;
            }
            for h in 0..s.hidden {
                let d = delta_hidden[h] * hidden[h] * (1.0 - hidden[h]);
                let g1 = &mut grad[h * stride1..(h + 1) * stride1];
                for (g, xi) in g1[..s.inputs].iter_mut().zip(x) {
                    *g += d * xi;
                }
                g1[s.inputs] += d;
            }
        }
        (loss, grad)
    }
}

/// Column mean and sd; constant columns get sd 0 and standardise to 0.
fn column_moments(matrix: &[f64], p: usize) -> (Vec<f64>, Vec<f64>) {
    let n = (matrix.len() / p).max(1) as f64;
    let mut mean = vec![0.0; p];
    for row in matrix.chunks_exact(p) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut sd = vec![0.0; p];
    for row in matrix.chunks_exact(p) {
        for ((s, v), m) in sd.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    sd.iter_mut().for_each(|s| *s = (*s / n).sqrt());
    (mean, sd)
}

fn standardise_row(x: &[f64], mean: &[f64], sd: &[f64], out: &mut Vec<f64>) {
    out.extend(x.iter().zip(mean).zip(sd).map(|((v, m), s)| {
        if *s > 1e-12 {
            (v - m) / s
        } else {
            0.0
        }
    }));
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NnetModel {
    shape: Shape,
    weights: Vec<f64>,
    mean: Vec<f64>,
    sd: Vec<f64>,
    loss_trace: Vec<f64>,
}

impl NnetModel {
    pub fn fit(
        matrix: &[f64],
        p: usize,
        labels: &[usize],
        n_classes: usize,
        params: &NnetParams,
        seed: u64,
    ) -> Result<Self> {
        let (mean, sd) = column_moments(matrix, p);
        let mut inputs = Vec::with_capacity(matrix.len());
        for row in matrix.chunks_exact(p) {
            standardise_row(row, &mean, &sd, &mut inputs);
        }
        let shape = Shape {
            inputs: p,
            hidden: params.hidden,
            outputs: n_classes,
        };
        let mut rng = seed::rng(seed::derive_str(seed, "nnet-init"));
        let mut w: Vec<f64> = match params.init {
            WeightInit::Uniform => (0..shape.n_weights()).map(|_| rng.random_range(-0.5..=0.5)).collect(),
            WeightInit::Zeros => vec![0.0; shape.n_weights()],
        };
        let objective = NnetObjective {
            shape,
            inputs: &inputs,
            labels,
            decay: params.weight_decay,
        };
        let (mut loss, mut grad) = objective.loss_and_gradient(&w);
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss(0));
        }
        let mut loss_trace = vec![loss];
        let n = labels.len().max(1) as f64;
        let mut step = 1.0 / n;
        for _ in 0..params.max_iter {
            let g2: f64 = grad.iter().map(|g| g * g).sum();
            if g2 < 1e-20 {
                break;
            }
            let mut accepted = false;
            for _ in 0..60 {
                let trial: Vec<f64> = w.iter().zip(&grad).map(|(wi, gi)| wi - step * gi).collect();
                let (l, g) = objective.loss_and_gradient(&trial);
                // Armijo sufficient decrease
                if l.is_finite() && l <= loss - 1e-4 * step * g2 {
                    w = trial;
                    loss = l;
                    grad = g;
                    accepted = true;
                    break;
                }
                step /= 2.0;
            }
            if !accepted {
                break;
            }
            loss_trace.push(loss);
            step *= 2.0;
        }
        Ok(Self {
            shape,
            weights: w,
            mean,
            sd,
            loss_trace,
        })
    }

    pub fn proba(&self, x: &[f64]) -> Vec<f64> {
        let mut z = Vec::with_capacity(x.len());
        standardise_row(x, &self.mean, &self.sd, &mut z);
        let mut hidden = vec![0.0; self.shape.hidden];
        let mut out = vec![0.0; self.shape.outputs];
        self.shape.forward(&self.weights, &z, &mut hidden, &mut out);
        out
    }

    pub fn loss_trace(&self) -> &[f64] {
        &self.loss_trace
    }
}
