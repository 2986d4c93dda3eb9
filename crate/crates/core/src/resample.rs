//! SMOTE and ADASYN oversampling.
//!
//! Both methods grow every minority class by interpolating between a class
//! row and one of its same-class nearest neighbours:
//! `x_new = x_seed + t * (x_neighbor - x_seed)`, `t ~ U[0, 1)`.
//! They differ in how many synthetic rows each seed row receives. SMOTE
//! deals seeds round-robin until the class matches the majority count;
//! ADASYN weights each seed by the share of other-class rows among its
//! neighbours in the full training set.
//!
//! Original rows are kept unmodified as a prefix of the output; synthetic
//! rows follow, grouped by class in class-index order. Each class draws
//! from its own generator seeded by (seed, class), so the result does not
//! depend on the order classes are processed in.

use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::neighbors::KnnIndex;
use crate::seed;
use crate::util::largest_remainder;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum ResampleMethod {
    #[default]
    None,
    Smote,
    Adasyn,
}

impl fmt::Display for ResampleMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ResampleMethod::None => "none",
            ResampleMethod::Smote => "smote",
            ResampleMethod::Adasyn => "adasyn",
        })
    }
}

impl FromStr for ResampleMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "original" => Ok(ResampleMethod::None),
            "smote" => Ok(ResampleMethod::Smote),
            "adasyn" => Ok(ResampleMethod::Adasyn),
            other => Err(Error::InvalidConfig(format!("unknown resample method `{other}`"))),
        }
    }
}

/// How far minority classes are grown. Only one policy exists today.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TargetPolicy {
    #[default]
    BalanceToMajority,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResampleConfig {
    pub method: ResampleMethod,
    pub k_neighbors: usize,
    /// ADASYN balance level: 1 grows each class all the way to the majority.
    pub beta: f64,
    pub target_policy: TargetPolicy,
    pub seed: u64,
    /// Test hook: use this interpolation coefficient instead of drawing one.
    pub fixed_t: Option<f64>,
}

impl Default for ResampleConfig {
    fn default() -> Self {
        Self {
            method: ResampleMethod::None,
            k_neighbors: 5,
            beta: 1.0,
            target_policy: TargetPolicy::BalanceToMajority,
            seed: 0,
            fixed_t: None,
        }
    }
}

impl ResampleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_neighbors == 0 {
            return Err(Error::InvalidConfig("k_neighbors must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::InvalidConfig(format!("beta {} outside [0,1]", self.beta)));
        }
        if let Some(t) = self.fixed_t {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidConfig(format!("fixed_t {t} outside [0,1]")));
            }
        }
        Ok(())
    }
}

/// Provenance of one synthetic row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticParent {
    pub seed_row: usize,
    pub neighbor_row: usize,
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResampleOutcome {
    pub dataset: Dataset,
    pub synthetic_flags: Vec<bool>,
    pub generated_per_class: Vec<usize>,
    /// One entry per synthetic row, in output order.
    pub parent_pairs: Vec<SyntheticParent>,
}

impl ResampleOutcome {
    fn identity(train: &Dataset) -> Self {
        Self {
            dataset: train.clone(),
            synthetic_flags: vec![false; train.n()],
            generated_per_class: vec![0; train.n_classes()],
            parent_pairs: Vec::new(),
        }
    }

    pub fn n_synthetic(&self) -> usize {
        self.parent_pairs.len()
    }
}

/// Dispatches on `cfg.method`.
pub fn resample(train: &Dataset, cfg: &ResampleConfig) -> Result<ResampleOutcome> {
    match cfg.method {
        ResampleMethod::None => {
            cfg.validate()?;
            Ok(ResampleOutcome::identity(train))
        }
        ResampleMethod::Smote => smote(train, cfg),
        ResampleMethod::Adasyn => adasyn(train, cfg),
    }
}

struct ClassPlan {
    class: usize,
    /// (seed row, number of synthetic rows to draw from it), in draw order.
    quotas: Vec<(usize, usize)>,
}

fn rows_of(train: &Dataset, class: usize) -> Vec<usize> {
    (0..train.n()).filter(|&i| train.label(i) == class).collect()
}

fn check_sizes(train: &Dataset, counts: &[usize], majority: usize) -> Result<()> {
    for (class, &count) in counts.iter().enumerate() {
        if class != majority && count < counts[majority] && count < 2 {
            return Err(Error::ClassTooSmall(train.class_names()[class].clone()));
        }
    }
    Ok(())
}

/// Interpolates the planned rows of every class and assembles the outcome.
fn synthesize(train: &Dataset, cfg: &ResampleConfig, plans: Vec<ClassPlan>) -> Result<ResampleOutcome> {
    let p = train.p();
    let index = KnnIndex::new(train.matrix(), p)?;
    let labels = train.labels();
    let per_class: Vec<(usize, Vec<f64>, Vec<SyntheticParent>)> = plans
        .into_par_iter()
        .map(|plan| {
            let mut rng = seed::rng(seed::derive(seed::derive_str(cfg.seed, "resample"), plan.class as u64));
            let class_size = labels.iter().filter(|&&l| l == plan.class).count();
            let k = cfg.k_neighbors.min(class_size - 1);
            let mut rows = Vec::new();
            let mut parents = Vec::new();
            for &(seed_row, quota) in &plan.quotas {
                if quota == 0 {
                    continue;
                }
                let neighbours = index.query_row(seed_row, k, Some((labels, plan.class)))?;
                let x = train.row(seed_row);
                for _ in 0..quota {
                    let nb = *neighbours.choose(&mut rng).expect("k >= 1");
                    let t = match cfg.fixed_t {
                        Some(t) => t,
                        None => rng.random::<f64>(),
                    };
                    let z = train.row(nb);
                    rows.extend(x.iter().zip(z).map(|(&a, &b)| {
                        let v = a + t * (b - a);
                        v.clamp(a.min(b), a.max(b))
                    }));
                    parents.push(SyntheticParent {
                        seed_row,
                        neighbor_row: nb,
                        t,
                    });
                }
            }
            Ok((plan.class, rows, parents))
        })
        .collect::<Result<_>>()?;

    let mut generated_per_class = vec![0; train.n_classes()];
    let mut new_rows = Vec::new();
    let mut new_labels = Vec::new();
    let mut parent_pairs = Vec::new();
    for (class, rows, parents) in per_class {
        generated_per_class[class] = parents.len();
        new_labels.extend(std::iter::repeat_n(class, parents.len()));
        new_rows.extend(rows);
        parent_pairs.extend(parents);
    }
    let mut synthetic_flags = vec![false; train.n()];
    synthetic_flags.extend(std::iter::repeat_n(true, parent_pairs.len()));
    Ok(ResampleOutcome {
        dataset: train.with_appended(new_rows, new_labels),
        synthetic_flags,
        generated_per_class,
        parent_pairs,
    })
}

/// SMOTE with every minority class grown to the majority count.
pub fn smote(train: &Dataset, cfg: &ResampleConfig) -> Result<ResampleOutcome> {
    cfg.validate()?;
    let dist = train.class_distribution();
    let majority = dist.majority();
    check_sizes(train, &dist.counts, majority)?;
    let target = dist.counts[majority];
    let plans = (0..train.n_classes())
        .filter(|&c| dist.counts[c] < target)
        .map(|class| {
            let mut rng = seed::rng(seed::derive(seed::derive_str(cfg.seed, "smote-order"), class as u64));
            let mut order = rows_of(train, class);
            order.shuffle(&mut rng);
            let need = target - dist.counts[class];
            let m = order.len();
            // round-robin: the first `need % m` seeds get one extra
            let quotas = order
                .iter()
                .enumerate()
                .map(|(pos, &row)| (row, need / m + usize::from(pos < need % m)))
                .collect();
            ClassPlan { class, quotas }
        })
        .collect();
    synthesize(train, cfg, plans)
}

/// Per-row ADASYN difficulty: the number of rows of another class among
/// the `k` nearest neighbours in the whole training set.
pub fn adasyn_difficulty(train: &Dataset, rows: &[usize], k: usize) -> Result<Vec<usize>> {
    let index = KnnIndex::new(train.matrix(), train.p())?;
    let k = k.min(train.n() - 1);
    rows.par_iter()
        .map(|&i| {
            let nb = index.query_row(i, k, None)?;
            Ok(nb.iter().filter(|&&j| train.label(j) != train.label(i)).count())
        })
        .collect()
}

/// Splits `total` synthetic rows across seeds in proportion to `delta`;
/// all-zero difficulty falls back to an even spread.
pub fn adasyn_allocation(delta: &[usize], growth: f64) -> Vec<usize> {
    let total = growth.round() as usize;
    let sum: usize = delta.iter().sum();
    let weights: Vec<f64> = if sum == 0 {
        vec![1.0 / delta.len() as f64; delta.len()]
    } else {
        delta.iter().map(|&d| d as f64 / sum as f64).collect()
    };
    let quotas: Vec<f64> = weights.iter().map(|w| w * growth).collect();
    largest_remainder(&quotas, total)
}

/// ADASYN: each minority class grows by `(majority - count) * beta` rows,
/// allocated across its rows by neighbourhood difficulty.
pub fn adasyn(train: &Dataset, cfg: &ResampleConfig) -> Result<ResampleOutcome> {
    cfg.validate()?;
    let dist = train.class_distribution();
    let majority = dist.majority();
    let target = dist.counts[majority];
    if cfg.beta == 0.0 {
        return Ok(ResampleOutcome::identity(train));
    }
    check_sizes(train, &dist.counts, majority)?;
    let plans = (0..train.n_classes())
        .filter(|&c| dist.counts[c] < target)
        .map(|class| {
            let rows = rows_of(train, class);
            let delta = adasyn_difficulty(train, &rows, cfg.k_neighbors)?;
            let growth = (target - dist.counts[class]) as f64 * cfg.beta;
            let alloc = adasyn_allocation(&delta, growth);
            Ok(ClassPlan {
                class,
                quotas: rows.into_iter().zip(alloc).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    synthesize(train, cfg, plans)
}
