//! Cross-validation cell runner shared by the importance and bench modules.

use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::Result;
use crate::metrics::{ConfusionMatrix, EvalRecord};
use crate::models::{self, ModelConfig};
use crate::resample::{self, ResampleConfig, ResampleMethod};
use crate::seed;
use crate::split::FoldPlan;

/// Outcome of one (rep, fold) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub record: EvalRecord,
    /// Raw per-feature importance of the cell model, when the algorithm has one.
    pub importance: Option<Vec<f64>>,
    /// Training rows after any in-fold resampling.
    pub n_train: usize,
}

/// Seed of cell `index` under the master seed `seed`.
pub fn cell_seed(seed: u64, index: usize) -> u64 {
    seed::derive(seed::derive_str(seed, "cv-cell"), index as u64)
}

/// Trains `cfg` on every cell's training rows and scores the held-out fold.
///
/// `in_fold` resamples each training portion before fitting; the held-out
/// fold is never resampled. Cells run in parallel; results are returned in
/// (rep, fold) order.
pub fn run_cells(
    ds: &Dataset,
    plan: &FoldPlan,
    cfg: &ModelConfig,
    in_fold: Option<&ResampleConfig>,
) -> Vec<Result<CellResult>> {
    (0..plan.cells())
        .into_par_iter()
        .map(|cell| {
            let (rep, fold) = (cell / plan.k, cell % plan.k);
            let (train_rows, test_rows) = plan.train_test(rep, fold);
            let mut train = ds.subset(&train_rows);
            let cell_seed = cell_seed(cfg.seed, cell);
            if let Some(rc) = in_fold.filter(|rc| rc.method != ResampleMethod::None) {
                let rc = ResampleConfig {
                    seed: seed::derive_str(cell_seed, "resample"),
                    ..*rc
                };
                train = resample::resample(&train, &rc)?.dataset;
            }
            let model_cfg = ModelConfig {
                seed: seed::derive_str(cell_seed, "model"),
                ..*cfg
            };
            let model = models::train(&train, &model_cfg)?;
            let test = ds.subset(&test_rows);
            let cm = ConfusionMatrix::from_predictions(test.labels(), &model.predict(&test), ds.n_classes());
            Ok(CellResult {
                record: EvalRecord::from_confusion(rep, fold, &cm)?,
                importance: model.importance(),
                n_train: train.n(),
            })
        })
        .collect()
}
