//! Phase-resolved partial discharge (PRPD) classification.
//!
//! A PRPD measurement is a `phases × cycles` matrix of discharge magnitudes
//! (64 × 60 by default). This crate turns such matrices into compact feature
//! vectors, trains from-scratch probabilistic classifiers on them, combines
//! the classifiers with an out-of-fold stacking ensemble and evaluates the
//! result under repeated stratified splits.
//!
//! Module map:
//!
//! - [`signal`]: labels, signals, datasets and the dataset CSV format.
//! - [`features`]: phase magnitude, phase alignment and the three meta-features.
//! - [`synthetic`]: seeded generator of labelled PRPD corpora.
//! - [`learners`]: logistic regression, random forest, SVM, fuzzy SVM and
//!   gradient boosting behind one [`learners::Classifier`] contract.
//! - [`ensemble`]: stacking ensemble.
//! - [`evaluation`]: splits, scoring and the repeated-trial harness.
//! - [`render`]: grayscale heatmaps of single signals.

pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod learners;
pub mod model_file;
pub mod render;
pub mod seed;
pub mod signal;
pub mod synthetic;

pub use ensemble::{StackingConfig, StackingModel};
pub use error::{Error, Result, ValidationError};
pub use evaluation::{EvalReport, SplitSpec};
pub use features::{FeatureKind, FeatureMatrix, MetaFeatures, DEFAULT_THRESHOLD};
pub use learners::{ClassProbs, Classifier, Estimator, EstimatorSpec, FittedModel, ModelSpec};
pub use signal::{Dataset, Dims, PdLabel, PrpdSignal, NUM_CLASSES};
pub use synthetic::{ClassProfile, SyntheticSpec};
