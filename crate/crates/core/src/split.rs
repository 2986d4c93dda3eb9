//! Stratified train/test splitting and repeated stratified k-fold planning.
//!
//! Plans depend only on the label vector, the ratio or fold count, and the
//! seed. Fractional per-class allocations use largest-remainder rounding, so
//! every class lands within one row of its exact share.

use std::io::Write;

use log::warn;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed;
use crate::util::largest_remainder;

fn rows_by_class(labels: &[usize], n_classes: usize) -> Vec<Vec<usize>> {
    let mut by_class = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    by_class
}

fn n_classes_of(labels: &[usize]) -> usize {
    labels.iter().max().map_or(0, |m| m + 1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitPlan {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub ratio: f64,
    pub seed: u64,
}

/// Splits `labels` into a training share of `ratio` and a test remainder,
/// stratified by class. The test size is `round(n * (1 - ratio))`.
pub fn stratified_split(
    labels: &[usize],
    class_names: &[String],
    ratio: f64,
    seed: u64,
) -> Result<SplitPlan> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidRatio(ratio));
    }
    let n = labels.len();
    let by_class = rows_by_class(labels, class_names.len().max(n_classes_of(labels)));
    let test_total = (n as f64 * (1.0 - ratio)).round() as usize;
    let quotas: Vec<f64> = by_class
        .iter()
        .map(|rows| rows.len() as f64 * (1.0 - ratio))
        .collect();
    let test_counts = largest_remainder(&quotas, test_total);

    let mut rng = seed::rng(seed::derive_str(seed, "split"));
    let mut train = Vec::with_capacity(n - test_total);
    let mut test = Vec::with_capacity(test_total);
    for (class, rows) in by_class.iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        if test_counts[class] >= rows.len() {
            let name = class_names
                .get(class)
                .cloned()
                .unwrap_or_else(|| class.to_string());
            return Err(Error::DegenerateClass(name));
        }
        let mut shuffled = rows.clone();
        shuffled.shuffle(&mut rng);
        test.extend_from_slice(&shuffled[..test_counts[class]]);
        train.extend_from_slice(&shuffled[test_counts[class]..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitPlan {
        train_indices: train,
        test_indices: test,
        ratio,
        seed,
    })
}

/// Fold assignment for every (repetition, row).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub reps: usize,
    pub seed: u64,
    /// `assignment[rep][row]` is the fold holding `row` out in repetition `rep`.
    pub assignment: Vec<Vec<usize>>,
}

impl FoldPlan {
    pub fn n(&self) -> usize {
        self.assignment.first().map_or(0, Vec::len)
    }

    /// Number of (rep, fold) evaluation cells.
    pub fn cells(&self) -> usize {
        self.k * self.reps
    }

    /// (training rows, held-out rows) of one cell, both ascending.
    pub fn train_test(&self, rep: usize, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, &f) in self.assignment[rep].iter().enumerate() {
            if f == fold {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        (train, test)
    }

    /// Writes `row_index,rep,fold` lines for audit.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["row_index", "rep", "fold"])?;
        for (rep, folds) in self.assignment.iter().enumerate() {
            for (i, f) in folds.iter().enumerate() {
                w.write_record([i.to_string(), rep.to_string(), f.to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io("<output>", e))?;
        Ok(())
    }
}

/// Repeated stratified k-fold. Within each class the shuffled rows are dealt
/// round-robin across folds; the dealing position carries over from one
/// class to the next so fold sizes stay balanced too.
pub fn repeated_stratified_kfold(
    labels: &[usize],
    k: usize,
    reps: usize,
    seed: u64,
) -> Result<FoldPlan> {
    let n = labels.len();
    if k < 2 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    if reps == 0 {
        return Err(Error::InvalidConfig("reps must be at least 1".into()));
    }
    let by_class = rows_by_class(labels, n_classes_of(labels));
    if let Some(small) = by_class.iter().filter(|r| !r.is_empty()).map(Vec::len).min() {
        if small < k {
            warn!("smallest class has {small} rows, fewer than k={k}; some folds lack it");
        }
    }
    let base = seed::derive_str(seed, "kfold");
    let assignment = (0..reps)
        .map(|rep| {
            let mut rng = seed::rng(seed::derive(base, rep as u64));
            let mut folds = vec![0usize; n];
            let mut cursor = 0usize;
            for rows in &by_class {
                let mut shuffled = rows.clone();
                shuffled.shuffle(&mut rng);
                for row in shuffled {
                    folds[row] = cursor % k;
                    cursor += 1;
                }
            }
            folds
        })
        .collect();
    Ok(FoldPlan {
        k,
        reps,
        seed,
        assignment,
    })
}
