//! Soft-margin SVM with an RBF kernel, solved by SMO.
//!
//! The binary solver follows the libsvm formulation: minimise
//! `0.5 a'Qa - e'a` subject to `0 <= a <= C`, `y'a = 0`, with
//! `Q_ij = y_i y_j K(x_i, x_j)`. Each iteration updates the pair chosen by
//! second-order working-set selection and stops when the maximal KKT
//! violation `m(a) - M(a)` drops below `tol`. Multiclass problems are
//! decomposed one-vs-one; the class with most pairwise wins is predicted,
//! ties to the lowest class index.

use std::collections::{HashMap, VecDeque};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::util::{argmax, squared_euclidean};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    /// RBF width; `None` means `1 / p`.
    pub gamma: Option<f64>,
    pub tol: f64,
    /// Iteration budget in multiples of the subproblem size.
    pub max_passes: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: None,
            tol: 1e-3,
            max_passes: 100,
        }
    }
}

pub fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    (-gamma * squared_euclidean(a, b)).exp()
}

const TAU: f64 = 1e-12;
const CACHE_BUDGET: usize = 1 << 24;

struct KernelRows<'a> {
    x: &'a [f64],
    p: usize,
    n: usize,
    gamma: f64,
    cache: HashMap<usize, Vec<f64>>,
    order: VecDeque<usize>,
    capacity: usize,
}

impl<'a> KernelRows<'a> {
    fn new(x: &'a [f64], p: usize, gamma: f64) -> Self {
        let n = x.len() / p;
        Self {
            x,
            p,
            n,
            gamma,
            cache: HashMap::new(),
            order: VecDeque::new(),
            capacity: (CACHE_BUDGET / n.max(1)).max(2),
        }
    }

    fn point(&self, i: usize) -> &'a [f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    fn row(&mut self, i: usize) -> &[f64] {
        if !self.cache.contains_key(&i) {
            if self.cache.len() >= self.capacity {
                if let Some(old) = self.order.pop_front() {
                    self.cache.remove(&old);
                }
            }
            let xi = self.point(i);
            let row = (0..self.n).map(|j| rbf(self.gamma, xi, self.point(j))).collect();
            self.cache.insert(i, row);
            self.order.push_back(i);
        }
        &self.cache[&i]
    }
}

/// One fitted two-class machine. `+1` is the first class of the pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    /// Dual coefficients for every training row of the subproblem.
    pub alpha: Vec<f64>,
    pub y: Vec<f64>,
    /// Bias `b` so that `f(x) = sum a_i y_i K(x_i, x) + b`.
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Support vectors (rows with `a > 0`), row-major, with their `a_i y_i`.
    sv: Vec<f64>,
    coef: Vec<f64>,
    p: usize,
}

impl BinarySvm {
    /// `x` is row-major with `y.len()` rows; `y` holds +1/-1.
    pub fn fit(x: &[f64], p: usize, y: &[f64], params: &SvmParams, gamma: f64) -> Self {
        let n = y.len();
        let c = params.c;
        let mut alpha = vec![0.0; n];
        let mut grad = vec![-1.0; n];
        let mut kernel = KernelRows::new(x, p, gamma);
        let max_iter = params.max_passes.saturating_mul(n.max(1));
        let mut converged = false;
        let mut iterations = 0;
        let up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
        let low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);
        while iterations < max_iter {
            // i: maximal -y G over I_up
            let mut gmax = f64::NEG_INFINITY;
            let mut i = usize::MAX;
            for t in 0..n {
                if up(alpha[t], y[t]) && -y[t] * grad[t] > gmax {
                    gmax = -y[t] * grad[t];
                    i = t;
                }
            }
            let mut gmin = f64::INFINITY;
            for t in 0..n {
                if low(alpha[t], y[t]) {
                    gmin = gmin.min(-y[t] * grad[t]);
                }
            }
            if i == usize::MAX || gmax - gmin < params.tol {
                converged = true;
                break;
            }
            let ki: Vec<f64> = kernel.row(i).to_vec();
            // j: second-order selection over I_low with -y G < gmax
            let mut j = usize::MAX;
            let mut best = f64::INFINITY;
            for t in 0..n {
                if !low(alpha[t], y[t]) {
                    continue;
                }
                let b = gmax + y[t] * grad[t];
                if b > 0.0 {
                    let a = (ki[i] + 1.0 - 2.0 * ki[t]).max(TAU);
                    let obj = -(b * b) / a;
                    if obj < best {
                        best = obj;
                        j = t;
                    }
                }
            }
            if j == usize::MAX {
                converged = true;
                break;
            }
            let kj: Vec<f64> = kernel.row(j).to_vec();
            let (old_i, old_j) = (alpha[i], alpha[j]);
            let quad = (ki[i] + kj[j] - 2.0 * ki[j]).max(TAU);
            if y[i] != y[j] {
                let delta = (-grad[i] - grad[j]) / quad;
                let diff = alpha[i] - alpha[j];
                alpha[i] += delta;
                alpha[j] += delta;
                if diff > 0.0 {
                    if alpha[j] < 0.0 {
                        alpha[j] = 0.0;
                        alpha[i] = diff;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if diff > 0.0 {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = c - diff;
                    }
                } else if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            } else {
                let delta = (grad[i] - grad[j]) / quad;
                let sum = alpha[i] + alpha[j];
                alpha[i] -= delta;
                alpha[j] += delta;
                if sum > c {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = sum - c;
                    }
                } else if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if sum > c {
                    if alpha[j] > c {
                        alpha[j] = c;
                        alpha[i] = sum - c;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
            let di = alpha[i] - old_i;
            let dj = alpha[j] - old_j;
            for t in 0..n {
                grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
            }
            iterations += 1;
        }
        if !converged {
            warn!("SMO stopped after {iterations} iterations without meeting tol={}", params.tol);
        }
        let bias = -rho(&alpha, &grad, y, c);
        let mut sv = Vec::new();
        let mut coef = Vec::new();
        for t in 0..n {
            if alpha[t] > 0.0 {
                sv.extend_from_slice(&x[t * p..(t + 1) * p]);
                coef.push(alpha[t] * y[t]);
            }
        }
        Self {
            alpha,
            y: y.to_vec(),
            bias,
            gamma,
            c,
            converged,
            iterations,
            sv,
            coef,
            p,
        }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.sv
            .chunks_exact(self.p.max(1))
            .zip(&self.coef)
            .map(|(s, c)| c * rbf(self.gamma, s, x))
            .sum::<f64>()
            + self.bias
    }

    pub fn n_support(&self) -> usize {
        self.coef.len()
    }
}

/// libsvm's offset: mean of `y G` over free vectors, else the midpoint of
/// the feasible interval.
fn rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else if ub.is_finite() {
        ub
    } else if lb.is_finite() {
        lb
    } else {
        0.0
    }
}

/// One machine per class pair; a pair missing one of its classes in the
/// training data always votes for the class that is present.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PairMachine {
    Fitted(BinarySvm),
    Constant(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    n_classes: usize,
    /// `(a, b, machine)` with `a < b`; positive decision votes for `a`.
    pairs: Vec<(usize, usize, PairMachine)>,
    converged: bool,
}

impl SvmModel {
    pub fn fit(matrix: &[f64], p: usize, labels: &[usize], n_classes: usize, params: &SvmParams) -> Self {
        let gamma = params.gamma.unwrap_or(1.0 / p as f64);
        let mut pairs = Vec::new();
        let mut converged = true;
        for a in 0..n_classes {
            for b in a + 1..n_classes {
                let rows: Vec<usize> = (0..labels.len())
                    .filter(|&i| labels[i] == a || labels[i] == b)
                    .collect();
                let has_a = rows.iter().any(|&i| labels[i] == a);
                let has_b = rows.iter().any(|&i| labels[i] == b);
                let machine = match (has_a, has_b) {
                    (true, true) => {
                        let mut x = Vec::with_capacity(rows.len() * p);
                        for &i in &rows {
                            x.extend_from_slice(&matrix[i * p..(i + 1) * p]);
                        }
                        let y: Vec<f64> = rows.iter().map(|&i| if labels[i] == a { 1.0 } else { -1.0 }).collect();
                        let m = BinarySvm::fit(&x, p, &y, params, gamma);
                        converged &= m.converged;
                        PairMachine::Fitted(m)
                    }
                    (false, true) => PairMachine::Constant(b),
                    _ => PairMachine::Constant(a),
                };
                pairs.push((a, b, machine));
            }
        }
        Self {
            n_classes,
            pairs,
            converged,
        }
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn pairs(&self) -> &[(usize, usize, PairMachine)] {
        &self.pairs
    }

    pub fn votes(&self, x: &[f64]) -> Vec<f64> {
        let mut votes = vec![0.0; self.n_classes];
        for (a, b, machine) in &self.pairs {
            let winner = match machine {
                PairMachine::Fitted(m) => {
                    if m.decision(x) >= 0.0 {
                        *a
                    } else {
                        *b
                    }
                }
                PairMachine::Constant(k) => *k,
            };
            votes[winner] += 1.0;
        }
        votes
    }

    /// Normalised vote counts.
    pub fn proba(&self, x: &[f64]) -> Vec<f64> {
        let mut v = self.votes(x);
        let total: f64 = v.iter().sum();
        if total > 0.0 {
            v.iter_mut().for_each(|x| *x /= total);
        } else {
            let u = 1.0 / self.n_classes as f64;
            v.iter_mut().for_each(|x| *x = u);
        }
        v
    }

    pub fn predict_one(&self, x: &[f64]) -> usize {
        argmax(&self.votes(x))
    }
}
