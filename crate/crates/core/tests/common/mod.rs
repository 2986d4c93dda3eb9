#![allow(dead_code)]

use iebench::data::{Dataset, FeatureDescriptor, FeatureKind};
use iebench::ingest::{generate_synthetic, SynthSpec};
use iebench::models::nnet::{NnetObjective, Shape};
use iebench::models::svm::{rbf, BinarySvm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn synth(n: usize, p: usize, props: &[f64], informative: &[usize], effect: f64, seed: u64) -> Dataset {
    generate_synthetic(&SynthSpec {
        n,
        p,
        c: props.len(),
        class_proportions: props.to_vec(),
        informative_features: informative.to_vec(),
        effect_size: effect,
        seed,
    })
    .expect("valid synthetic spec")
}

/// Real-valued dataset with unconstrained (non-Likert) features.
pub fn real_dataset(rows: &[Vec<f64>], labels: &[usize], n_classes: usize) -> Dataset {
    let p = rows[0].len();
    let features = (0..p)
        .map(|j| FeatureDescriptor::new(format!("x{j}"), FeatureKind::DemographicCategorical))
        .collect();
    let names = (0..n_classes).map(|c| format!("c{c}")).collect();
    Dataset::new(features, rows.concat(), labels.to_vec(), names).unwrap()
}

/// Two Gaussian-ish blobs in `p` dimensions separated along every axis.
pub fn blobs(n_per_class: usize, p: usize, gap: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for class in 0..2 {
        for _ in 0..n_per_class {
            let centre = if class == 0 { -gap / 2.0 } else { gap / 2.0 };
            rows.push((0..p).map(|_| centre + rng.random_range(-1.0..1.0)).collect::<Vec<f64>>());
            labels.push(class);
        }
    }
    real_dataset(&rows, &labels, 2)
}

pub fn accuracy_of(pred: &[usize], truth: &[usize]) -> f64 {
    pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
}

/// Largest relative gap between the analytic network gradient and central
/// differences (step 1e-5) at a random point.
pub fn finite_difference_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = Shape {
        inputs: 4,
        hidden: 3,
        outputs: 3,
    };
    let inputs: Vec<f64> = (0..10 * 4).map(|_| rng.random_range(-1.5..1.5)).collect();
    let labels: Vec<usize> = (0..10).map(|i| i % 3).collect();
    let obj = NnetObjective {
        shape,
        inputs: &inputs,
        labels: &labels,
        decay: 1e-2,
    };
    let w: Vec<f64> = (0..shape.n_weights()).map(|_| rng.random_range(-0.5..0.5)).collect();
    let (_, grad) = obj.loss_and_gradient(&w);
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..w.len() {
        let mut plus = w.clone();
        plus[i] += eps;
        let mut minus = w.clone();
        minus[i] -= eps;
        let fd = (obj.loss(&plus) - obj.loss(&minus)) / (2.0 * eps);
        let rel = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-8);
        worst = worst.max(rel);
    }
    worst
}

/// Independent KKT check: recompute f(x_i) from the full dual vector.
pub fn kkt_violation(x: &[f64], p: usize, m: &BinarySvm) -> f64 {
    let n = m.y.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let xi = &x[i * p..(i + 1) * p];
        let f: f64 = (0..n)
            .map(|j| m.alpha[j] * m.y[j] * rbf(m.gamma, &x[j * p..(j + 1) * p], xi))
            .sum::<f64>()
            + m.bias;
        let margin = m.y[i] * f;
        let a = m.alpha[i];
        let v = if a <= 0.0 {
            (1.0 - margin).max(0.0)
        } else if a >= m.c {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        worst = worst.max(v);
    }
    worst
}
