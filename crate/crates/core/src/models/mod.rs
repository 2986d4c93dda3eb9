//! The five benchmark classifiers behind one train/predict contract.
//!
//! Every model predicts the argmax of its class-probability vector with ties
//! going to the lowest class index. Probabilities are vote fractions for
//! kNN, random forest and SVM (one-vs-one votes), and softmax outputs for
//! boosting and the neural network.

pub mod cart;
pub mod forest;
pub mod gbm;
pub mod knn;
pub mod nnet;
pub mod svm;

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::util::argmax;

pub use cart::{CartModel, TreeParams};
pub use forest::{RandomForest, RfParams};
pub use gbm::{GbmModel, GbmParams};
pub use knn::{KnnModel, KnnParams};
pub use nnet::{NnetModel, NnetParams, WeightInit};
pub use svm::{SvmModel, SvmParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Knn,
    Nnet,
    Gbm,
    Rf,
    SvmRbf,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Gbm,
        Algorithm::Nnet,
        Algorithm::Knn,
        Algorithm::Rf,
        Algorithm::SvmRbf,
    ];

    /// Short name used in reports and on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Knn => "knn",
            Algorithm::Nnet => "nnet",
            Algorithm::Gbm => "gbm",
            Algorithm::Rf => "rf",
            Algorithm::SvmRbf => "svmRadial",
        }
    }

    pub fn has_importance(&self) -> bool {
        matches!(self, Algorithm::Rf | Algorithm::Gbm)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "knn" => Ok(Algorithm::Knn),
            "nnet" => Ok(Algorithm::Nnet),
            "gbm" => Ok(Algorithm::Gbm),
            "rf" | "randomforest" => Ok(Algorithm::Rf),
            "svm" | "svm_rbf" | "svmradial" => Ok(Algorithm::SvmRbf),
            other => Err(Error::InvalidConfig(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Hyperparameters for every algorithm; only the selected one is used.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub knn: KnnParams,
    pub rf: RfParams,
    pub gbm: GbmParams,
    pub nnet: NnetParams,
    pub svm: SvmParams,
}

impl Hyperparameters {
    pub fn validate(&self, algorithm: Algorithm) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("{algorithm}: {m}")));
        match algorithm {
            Algorithm::Knn if self.knn.k == 0 => bad("k must be >= 1"),
            Algorithm::Rf if self.rf.n_trees == 0 => bad("n_trees must be >= 1"),
            Algorithm::Rf if self.rf.mtry == Some(0) => bad("mtry must be >= 1"),
            Algorithm::Rf if self.rf.min_leaf == 0 => bad("min_leaf must be >= 1"),
            Algorithm::Gbm if self.gbm.depth == 0 => bad("depth must be >= 1"),
            Algorithm::Gbm if self.gbm.min_leaf == 0 => bad("min_leaf must be >= 1"),
            Algorithm::Gbm if !(0.0..=1.0).contains(&self.gbm.learning_rate) => {
                bad("learning_rate must lie in [0,1]")
            }
            Algorithm::Nnet if self.nnet.hidden == 0 => bad("hidden must be >= 1"),
            Algorithm::Nnet if !(self.nnet.weight_decay >= 0.0) => bad("weight_decay must be >= 0"),
            Algorithm::SvmRbf if !(self.svm.c > 0.0) => bad("C must be > 0"),
            Algorithm::SvmRbf if !(self.svm.tol > 0.0) => bad("tol must be > 0"),
            Algorithm::SvmRbf if self.svm.gamma.is_some_and(|g| !(g > 0.0)) => bad("gamma must be > 0"),
            Algorithm::SvmRbf if self.svm.max_passes == 0 => bad("max_passes must be >= 1"),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub algorithm: Algorithm,
    pub hyper: Hyperparameters,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(algorithm: Algorithm, seed: u64) -> Self {
        Self {
            algorithm,
            hyper: Hyperparameters::default(),
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "state", rename_all = "snake_case")]
pub enum FittedState {
    Knn(KnnModel),
    Cart(CartModel),
    Rf(RandomForest),
    Gbm(GbmModel),
    Nnet(NnetModel),
    Svm(SvmModel),
}

/// A fitted classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    n_classes: usize,
    n_features: usize,
    state: FittedState,
}

impl TrainedModel {
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn state(&self) -> &FittedState {
        &self.state
    }

    pub fn predict_proba_row(&self, x: &[f64]) -> Vec<f64> {
        match &self.state {
            FittedState::Knn(m) => m.proba(x),
            FittedState::Cart(m) => m.proba(x),
            FittedState::Rf(m) => m.proba(x),
            FittedState::Gbm(m) => m.proba(x),
            FittedState::Nnet(m) => m.proba(x),
            FittedState::Svm(m) => m.proba(x),
        }
    }

    pub fn predict_row(&self, x: &[f64]) -> usize {
        match &self.state {
            FittedState::Svm(m) => m.predict_one(x),
            FittedState::Cart(m) => m.predict_one(x),
            _ => argmax(&self.predict_proba_row(x)),
        }
    }

    pub fn predict(&self, ds: &Dataset) -> Vec<usize> {
        ds.rows().map(|r| self.predict_row(r)).collect()
    }

    pub fn predict_proba(&self, ds: &Dataset) -> Vec<Vec<f64>> {
        ds.rows().map(|r| self.predict_proba_row(r)).collect()
    }

    /// Per-feature importance for tree ensembles: total Gini decrease for
    /// the forest, total squared-error reduction for boosting.
    pub fn importance(&self) -> Option<Vec<f64>> {
        match &self.state {
            FittedState::Rf(m) => Some(m.importance().to_vec()),
            FittedState::Gbm(m) => Some(m.importance().to_vec()),
            FittedState::Cart(m) => Some(m.importance.clone()),
            _ => None,
        }
    }

    /// False when an iterative solver hit its iteration budget.
    pub fn converged(&self) -> bool {
        match &self.state {
            FittedState::Svm(m) => m.converged(),
            _ => true,
        }
    }
}

fn require_rows(train: &Dataset, min: usize) -> Result<()> {
    if train.n() < min {
        return Err(Error::InvalidDataset(format!(
            "training needs at least {min} rows, got {}",
            train.n()
        )));
    }
    Ok(())
}

fn wrap(train: &Dataset, state: FittedState) -> TrainedModel {
    TrainedModel {
        n_classes: train.n_classes(),
        n_features: train.p(),
        state,
    }
}

pub fn train_knn(train: &Dataset, params: &KnnParams) -> Result<TrainedModel> {
    require_rows(train, 1)?;
    if params.k == 0 || params.k > train.n() {
        return Err(Error::KTooLarge {
            k: params.k,
            available: train.n(),
        });
    }
    let m = KnnModel::fit(train.matrix(), train.p(), train.labels(), train.n_classes(), params.k);
    Ok(wrap(train, FittedState::Knn(m)))
}

pub fn train_cart(train: &Dataset, params: &TreeParams) -> Result<TrainedModel> {
    require_rows(train, 1)?;
    let m = CartModel::fit(train.matrix(), train.p(), train.labels(), train.n_classes(), *params);
    Ok(wrap(train, FittedState::Cart(m)))
}

pub fn train_rf(train: &Dataset, params: &RfParams, seed: u64) -> Result<TrainedModel> {
    require_rows(train, 2)?;
    let m = RandomForest::fit(train.matrix(), train.p(), train.labels(), train.n_classes(), params, seed);
    Ok(wrap(train, FittedState::Rf(m)))
}

pub fn train_gbm(train: &Dataset, params: &GbmParams) -> Result<TrainedModel> {
    require_rows(train, 2)?;
    let m = GbmModel::fit(train.matrix(), train.p(), train.labels(), train.n_classes(), params);
    Ok(wrap(train, FittedState::Gbm(m)))
}

pub fn train_nnet(train: &Dataset, params: &NnetParams, seed: u64) -> Result<TrainedModel> {
    require_rows(train, 2)?;
    let m = NnetModel::fit(train.matrix(), train.p(), train.labels(), train.n_classes(), params, seed)?;
    Ok(wrap(train, FittedState::Nnet(m)))
}

pub fn train_svm_rbf(train: &Dataset, params: &SvmParams) -> Result<TrainedModel> {
    require_rows(train, 2)?;
    let m = SvmModel::fit(train.matrix(), train.p(), train.labels(), train.n_classes(), params);
    Ok(wrap(train, FittedState::Svm(m)))
}

/// Trains the configured algorithm.
pub fn train(train_set: &Dataset, cfg: &ModelConfig) -> Result<TrainedModel> {
    cfg.hyper.validate(cfg.algorithm)?;
    let h = &cfg.hyper;
    match cfg.algorithm {
        Algorithm::Knn => train_knn(train_set, &h.knn),
        Algorithm::Rf => train_rf(train_set, &h.rf, cfg.seed),
        Algorithm::Gbm => train_gbm(train_set, &h.gbm),
        Algorithm::Nnet => train_nnet(train_set, &h.nnet, cfg.seed),
        Algorithm::SvmRbf => train_svm_rbf(train_set, &h.svm),
    }
}

pub const MODEL_FORMAT: &str = "iebench-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Container {
    format: String,
    version: u32,
    config: Option<ModelConfig>,
    model: TrainedModel,
}

/// Writes a versioned JSON container holding the config and fitted state.
pub fn save_model<W: Write>(model: &TrainedModel, config: Option<&ModelConfig>, out: W) -> Result<()> {
    let c = Container {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        config: config.copied(),
        model: model.clone(),
    };
    serde_json::to_writer(out, &c)?;
    Ok(())
}

pub fn load_model<R: Read>(input: R) -> Result<(TrainedModel, Option<ModelConfig>)> {
    let c: Container = serde_json::from_reader(input)?;
    if c.format != MODEL_FORMAT {
        return Err(Error::InvalidConfig(format!("not a model container: `{}`", c.format)));
    }
    if c.version != MODEL_VERSION {
        return Err(Error::UnsupportedVersion(c.version));
    }
    Ok((c.model, c.config))
}
