//! Probabilistic classifiers sharing one fit / predict contract.
//!
//! Every fitted model maps a feature row to a probability vector over the
//! four PD classes; the predicted label is the argmax with ties going to the
//! lowest class code. Logistic regression and both SVM variants standardize
//! their inputs internally; the tree ensembles consume raw features.

pub mod boosting;
pub mod forest;
pub mod logistic;
pub mod standardize;
pub mod svm;
pub mod tree;

use serde::{Deserialize, Serialize};

use crate::ensemble::{StackingConfig, StackingModel};
use crate::error::{Error, Result};
use crate::signal::{PdLabel, NUM_CLASSES};

pub use boosting::{BoostingHyper, GradientBoosting};
pub use forest::{ForestHyper, RandomForest};
pub use logistic::{LogisticHyper, LogisticModel};
pub use standardize::Standardizer;
pub use svm::{fuzzy_weights, KernelSpec, OvrSvm, SvmHyper};

/// Probabilities in label-code order.
pub type ClassProbs = [f64; NUM_CLASSES];

/// Label with the highest probability; the lowest code wins ties.
pub fn argmax(p: &ClassProbs) -> PdLabel {
    let mut best = 0;
    for k in 1..NUM_CLASSES {
        if p[k] > p[best] {
            best = k;
        }
    }
    PdLabel::ALL[best]
}

pub(crate) fn softmax(z: ClassProbs) -> ClassProbs {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut e = z.map(|v| (v - m).exp());
    let s: f64 = e.iter().sum();
    e.iter_mut().for_each(|v| *v /= s);
    e
}

pub trait Classifier {
    /// Feature width seen during fitting.
    fn width(&self) -> usize;

    /// Probabilities for one row of the fitted width.
    fn proba_row(&self, row: &[f64]) -> ClassProbs;

    fn predict_proba(&self, rows: &[Vec<f64>]) -> Result<Vec<ClassProbs>> {
        if let Some(bad) = rows.iter().find(|r| r.len() != self.width()) {
            return Err(Error::WidthMismatch {
                expected: self.width(),
                found: bad.len(),
            });
        }
        Ok(rows.iter().map(|r| self.proba_row(r)).collect())
    }

    fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<PdLabel>> {
        Ok(self.predict_proba(rows)?.iter().map(argmax).collect())
    }
}

/// Classifier kind and its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    LogisticRegression(LogisticHyper),
    RandomForest(ForestHyper),
    Svm(SvmHyper),
    FuzzySvm(SvmHyper),
    GradientBoosting(BoostingHyper),
}

impl ModelSpec {
    pub fn logistic() -> Self {
        ModelSpec::LogisticRegression(LogisticHyper::default())
    }
    pub fn forest() -> Self {
        ModelSpec::RandomForest(ForestHyper::default())
    }
    pub fn svm() -> Self {
        ModelSpec::Svm(SvmHyper::default())
    }
    pub fn linear_svm() -> Self {
        ModelSpec::Svm(SvmHyper::linear())
    }
    pub fn fuzzy_svm() -> Self {
        ModelSpec::FuzzySvm(SvmHyper::default())
    }
    pub fn boosting() -> Self {
        ModelSpec::GradientBoosting(BoostingHyper::default())
    }

    pub fn name(&self) -> String {
        match self {
            ModelSpec::LogisticRegression(_) => "Logistic Regression".into(),
            ModelSpec::RandomForest(_) => "Random Forest".into(),
            ModelSpec::Svm(h) if h.kernel == KernelSpec::Linear => "SVM (linear)".into(),
            ModelSpec::Svm(_) => "SVM".into(),
            ModelSpec::FuzzySvm(_) => "Fuzzy SVM (FSVM)".into(),
            ModelSpec::GradientBoosting(_) => "Gradient Boosting".into(),
        }
    }

    fn standardizes(&self) -> bool {
        matches!(
            self,
            ModelSpec::LogisticRegression(_) | ModelSpec::Svm(_) | ModelSpec::FuzzySvm(_)
        )
    }

    pub fn fit(&self, x: &[Vec<f64>], y: &[PdLabel], seed: u64) -> Result<FittedModel> {
        check_training(x, y)?;
        let standardizer = if self.standardizes() {
            Some(Standardizer::fit(x)?)
        } else {
            None
        };
        let z = standardizer.as_ref().map(|s| s.transform(x));
        let xs = z.as_deref().unwrap_or(x);
        let state = match self {
            ModelSpec::LogisticRegression(h) => {
                require_two_classes(y)?;
                ModelState::Logistic(LogisticModel::fit_with_trace(xs, y, h).0)
            }
            ModelSpec::RandomForest(h) => ModelState::Forest(RandomForest::fit(xs, y, seed, h)),
            ModelSpec::Svm(h) => {
                require_two_classes(y)?;
                ModelState::Svm(OvrSvm::fit(xs, y, h, None)?)
            }
            ModelSpec::FuzzySvm(h) => {
                require_two_classes(y)?;
                let w = fuzzy_weights(xs, y);
                ModelState::Svm(OvrSvm::fit(xs, y, h, Some(&w))?)
            }
            ModelSpec::GradientBoosting(h) => ModelState::Boosting(GradientBoosting::fit_with_trace(xs, y, seed, h).0),
        };
        Ok(FittedModel {
            spec: *self,
            width: x[0].len(),
            standardizer,
            state,
        })
    }
}

pub(crate) fn check_training(x: &[Vec<f64>], y: &[PdLabel]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::EmptyData);
    }
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let width = x[0].len();
    if width == 0 {
        return Err(Error::Config("feature rows are empty".into()));
    }
    if let Some(bad) = x.iter().find(|r| r.len() != width) {
        return Err(Error::WidthMismatch {
            expected: width,
            found: bad.len(),
        });
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Config("feature matrix contains non-finite values".into()));
    }
    Ok(())
}

fn require_two_classes(y: &[PdLabel]) -> Result<()> {
    if y.iter().all(|&l| l == y[0]) {
        Err(Error::SingleClass(y[0]))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelState {
    Logistic(LogisticModel),
    Forest(RandomForest),
    Svm(OvrSvm),
    Boosting(GradientBoosting),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub spec: ModelSpec,
    pub width: usize,
    pub standardizer: Option<Standardizer>,
    pub state: ModelState,
}

impl Classifier for FittedModel {
    fn width(&self) -> usize {
        self.width
    }

    fn proba_row(&self, row: &[f64]) -> ClassProbs {
        let z;
        let row = match &self.standardizer {
            Some(s) => {
                z = s.transform_row(row);
                &z[..]
            }
            None => row,
        };
        match &self.state {
            ModelState::Logistic(m) => m.predict_proba_row(row),
            ModelState::Forest(m) => m.predict_proba_row(row),
            ModelState::Svm(m) => m.predict_proba_row(row),
            ModelState::Boosting(m) => m.predict_proba_row(row),
        }
    }
}

/// A single classifier or a stacking ensemble, before fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorSpec {
    Single(ModelSpec),
    Stacking(StackingConfig),
}

impl EstimatorSpec {
    pub fn name(&self) -> String {
        match self {
            EstimatorSpec::Single(m) => m.name(),
            EstimatorSpec::Stacking(_) => "Stacking".into(),
        }
    }

    pub fn fit(&self, x: &[Vec<f64>], y: &[PdLabel], seed: u64) -> Result<Estimator> {
        Ok(match self {
            EstimatorSpec::Single(m) => Estimator::Single(m.fit(x, y, seed)?),
            EstimatorSpec::Stacking(c) => Estimator::Stacking(crate::ensemble::fit_stacking(c, x, y, seed)?),
        })
    }
}

impl From<ModelSpec> for EstimatorSpec {
    fn from(m: ModelSpec) -> Self {
        EstimatorSpec::Single(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Single(FittedModel),
    Stacking(StackingModel),
}

impl Classifier for Estimator {
    fn width(&self) -> usize {
        match self {
            Estimator::Single(m) => m.width(),
            Estimator::Stacking(m) => m.width(),
        }
    }

    fn proba_row(&self, row: &[f64]) -> ClassProbs {
        match self {
            Estimator::Single(m) => m.proba_row(row),
            Estimator::Stacking(m) => m.proba_row(row),
        }
    }
}
