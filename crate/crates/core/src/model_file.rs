//! Versioned, self-describing model files (JSON).
//!
//! A model file records how features were produced alongside the fitted
//! estimator, so a saved model can classify raw signals directly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureKind};
use crate::learners::{ClassProbs, Classifier, Estimator};
use crate::signal::{Dataset, Dims};

pub const FORMAT: &str = "prpd-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub features: FeatureKind,
    pub threshold: f64,
    pub dims: Dims,
    pub estimator: Estimator,
}

impl ModelFile {
    pub fn new(features: FeatureKind, threshold: f64, dims: Dims, estimator: Estimator) -> Self {
        ModelFile {
            format: FORMAT.into(),
            version: VERSION,
            features,
            threshold,
            dims,
            estimator,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != FORMAT {
            return Err(Error::Config(format!("not a model file (format {:?})", file.format)));
        }
        if file.version != VERSION {
            return Err(Error::Config(format!(
                "unsupported model file version {}",
                file.version
            )));
        }
        Ok(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Extracts this model's features from `dataset` and predicts.
    pub fn classify(&self, dataset: &Dataset) -> Result<Vec<ClassProbs>> {
        if dataset.dims() != self.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims.to_string(),
                found: dataset.dims().to_string(),
            });
        }
        let fm = extract_features(dataset, self.features, self.threshold)?;
        self.estimator.predict_proba(&fm.rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::StackingConfig;
    use crate::learners::{EstimatorSpec, ForestHyper, ModelSpec};
    use crate::signal::PdLabel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_reproduces_predictions_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                vec![
                    (i % 4) as f64 * 3.0 + rng.gen_range(-2.0..2.0),
                    rng.gen_range(0.0..1.0),
                    rng.gen_range(0.0..5.0),
                ]
            })
            .collect();
        let y: Vec<PdLabel> = (0..40).map(|i| PdLabel::ALL[i % 4]).collect();
        let specs = [
            EstimatorSpec::Single(ModelSpec::logistic()),
            EstimatorSpec::Single(ModelSpec::svm()),
            EstimatorSpec::Single(ModelSpec::fuzzy_svm()),
            EstimatorSpec::Single(ModelSpec::RandomForest(ForestHyper {
                n_trees: 10,
                ..Default::default()
            })),
            EstimatorSpec::Single(ModelSpec::boosting()),
            EstimatorSpec::Stacking(StackingConfig::default()),
        ];
        for spec in specs {
            let est = spec.fit(&x, &y, 3).unwrap();
            let file = ModelFile::new(FeatureKind::Meta, 0.4, Dims::default(), est);
            let back = ModelFile::from_json(&file.to_json().unwrap()).unwrap();
            assert_eq!(back, file);
            assert_eq!(
                back.estimator.predict_proba(&x).unwrap(),
                file.estimator.predict_proba(&x).unwrap()
            );
        }
    }

    #[test]
    fn rejects_foreign_files() {
        assert!(ModelFile::from_json(r#"{"format":"other"}"#).is_err());
    }
}
