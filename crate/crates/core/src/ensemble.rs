//! Stacking ensemble.
//!
//! Level-one classifiers are trained on the feature matrix; their outputs,
//! optionally joined with the original features, become the input of a
//! level-two meta classifier. Meta-training rows are produced out of fold:
//! the outputs for sample `i` come from level-one models whose training folds
//! exclude `i`. For inference the level-one models are refitted on the full
//! training set.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{argmax, check_training, ClassProbs, Classifier, FittedModel, ModelSpec};
use crate::seed::{derive_seed, rng_from_seed, stream};
use crate::signal::{PdLabel, NUM_CLASSES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelOneSpec {
    pub model: ModelSpec,
    /// Distinguishes the seeds of level-one models within one ensemble.
    #[serde(default)]
    pub seed_offset: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StackingConfig {
    pub level_one: Vec<LevelOneSpec>,
    pub meta: ModelSpec,
    /// Feed the four class probabilities of each level-one model (otherwise
    /// its predicted class code).
    pub use_probabilities: bool,
    /// Append the original features to the level-one outputs.
    pub include_original: bool,
    pub oof_folds: usize,
}

impl Default for StackingConfig {
    /// RBF SVM, linear SVM, logistic regression and random forest, combined
    /// by a random forest over their probabilities and the original features.
    fn default() -> Self {
        let level_one = [
            ModelSpec::svm(),
            ModelSpec::linear_svm(),
            ModelSpec::logistic(),
            ModelSpec::forest(),
        ]
        .into_iter()
        .enumerate()
        .map(|(k, model)| LevelOneSpec {
            model,
            seed_offset: k as u64,
        })
        .collect();
        StackingConfig {
            level_one,
            meta: ModelSpec::forest(),
            use_probabilities: true,
            include_original: true,
            oof_folds: 5,
        }
    }
}

impl StackingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.level_one.is_empty() {
            return Err(Error::Config("stacking needs at least one level-one classifier".into()));
        }
        if self.oof_folds < 2 {
            return Err(Error::Config(format!(
                "oof_folds must be at least 2, got {}",
                self.oof_folds
            )));
        }
        if self.level_one.iter().any(|l| matches!(l.model, ModelSpec::FuzzySvm(_))) {
            return Err(Error::Config(
                "fuzzy SVM is not supported as a level-one classifier".into(),
            ));
        }
        Ok(())
    }

    /// Width of the meta classifier's input for `original_width` features.
    pub fn meta_width(&self, original_width: usize) -> usize {
        let per_model = if self.use_probabilities { NUM_CLASSES } else { 1 };
        self.level_one.len() * per_model + if self.include_original { original_width } else { 0 }
    }

    fn assemble(&self, outputs: &[ClassProbs], original: &[f64]) -> Vec<f64> {
        let mut row = Vec::with_capacity(self.meta_width(original.len()));
        for p in outputs {
            if self.use_probabilities {
                row.extend_from_slice(p);
            } else {
                row.push(argmax(p).code() as f64);
            }
        }
        if self.include_original {
            row.extend_from_slice(original);
        }
        row
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackingModel {
    pub config: StackingConfig,
    pub width: usize,
    pub level_one: Vec<FittedModel>,
    pub meta: FittedModel,
}

impl StackingModel {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn proba_row(&self, row: &[f64]) -> ClassProbs {
        let outputs: Vec<ClassProbs> = self.level_one.iter().map(|m| m.proba_row(row)).collect();
        self.meta.proba_row(&self.config.assemble(&outputs, row))
    }
}

impl Classifier for StackingModel {
    fn width(&self) -> usize {
        self.width
    }

    fn proba_row(&self, row: &[f64]) -> ClassProbs {
        StackingModel::proba_row(self, row)
    }
}

/// Stratified fold assignment: within each class, a seeded shuffle deals
/// samples round-robin into `k` folds.
pub fn stratified_folds(y: &[PdLabel], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng_from_seed(seed);
    let mut fold = vec![0; y.len()];
    for class in PdLabel::ALL {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        members.shuffle(&mut rng);
        for (pos, i) in members.into_iter().enumerate() {
            fold[i] = pos % k;
        }
    }
    fold
}

/// Leakage-free meta-training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct OutOfFold {
    /// Fold of each training sample.
    pub folds: Vec<usize>,
    /// Level-one outputs per sample, one entry per level-one model.
    pub outputs: Vec<Vec<ClassProbs>>,
}

pub fn out_of_fold_outputs(config: &StackingConfig, x: &[Vec<f64>], y: &[PdLabel], seed: u64) -> Result<OutOfFold> {
    check_training(x, y)?;
    config.validate()?;
    let k = config.oof_folds;
    for class in PdLabel::ALL {
        let count = y.iter().filter(|&&l| l == class).count();
        if count > 0 && count < k {
            return Err(Error::InsufficientClassSamples {
                label: class,
                count,
                needed: k,
            });
        }
    }
    let folds = stratified_folds(y, k, derive_seed(seed, stream::FOLDS, 0));
    let jobs: Vec<(usize, usize)> = (0..k)
        .flat_map(|f| (0..config.level_one.len()).map(move |m| (f, m)))
        .collect();
    let fitted = jobs
        .par_iter()
        .map(|&(f, m)| {
            let train: Vec<usize> = (0..x.len()).filter(|&i| folds[i] != f).collect();
            let tx: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
            let ty: Vec<PdLabel> = train.iter().map(|&i| y[i]).collect();
            let spec = &config.level_one[m];
            let s = derive_seed(
                derive_seed(seed, stream::LEVEL_ONE, spec.seed_offset),
                stream::FOLDS,
                f as u64,
            );
            spec.model.fit(&tx, &ty, s)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut outputs = vec![vec![[0.0; NUM_CLASSES]; config.level_one.len()]; x.len()];
    for (&(f, m), model) in jobs.iter().zip(&fitted) {
        for i in (0..x.len()).filter(|&i| folds[i] == f) {
            outputs[i][m] = model.proba_row(&x[i]);
        }
    }
    Ok(OutOfFold { folds, outputs })
}

pub fn fit_stacking(config: &StackingConfig, x: &[Vec<f64>], y: &[PdLabel], seed: u64) -> Result<StackingModel> {
    let oof = out_of_fold_outputs(config, x, y, seed)?;
    let meta_rows: Vec<Vec<f64>> = oof
        .outputs
        .iter()
        .zip(x)
        .map(|(o, row)| config.assemble(o, row))
        .collect();
    let meta = config.meta.fit(&meta_rows, y, derive_seed(seed, stream::META, 0))?;
    let level_one = config
        .level_one
        .par_iter()
        .map(|spec| {
            spec.model
                .fit(x, y, derive_seed(seed, stream::LEVEL_ONE, spec.seed_offset))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StackingModel {
        config: config.clone(),
        width: x[0].len(),
        level_one,
        meta,
    })
}
