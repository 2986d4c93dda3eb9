//! Survey-based introvert/extrovert classification toolkit.
//!
//! The pipeline parses and preprocesses a MIES-layout survey export,
//! ranks features by cross-validated forest importance, optionally
//! rebalances the training data with SMOTE or ADASYN, and benchmarks five
//! classifiers with repeated stratified cross-validation plus a held-out
//! test split.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod config;
pub mod cv;
pub mod data;
pub mod error;
pub mod importance;
pub mod ingest;
pub mod metrics;
pub mod models;
pub mod neighbors;
pub mod resample;
pub mod seed;
pub mod split;
pub mod util;

pub use data::{ClassDistribution, Dataset, FeatureDescriptor, FeatureKind};
pub use error::{Error, Result};
