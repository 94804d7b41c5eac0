//! TOML configuration files: model hyperparameters and generator profiles.
//!
//! Both formats carry a `version` key and reject unknown keys.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use prpd_core::learners::{BoostingHyper, ForestHyper, LogisticHyper, SvmHyper};
use prpd_core::synthetic::ClassProfiles;
use prpd_core::{EstimatorSpec, ModelSpec, PdLabel, StackingConfig};
use serde::Deserialize;

use crate::UsageError;

pub const CONFIG_VERSION: u32 = 1;

/// Hyperparameter overrides. Absent sections keep the defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub version: u32,
    pub logistic_regression: Option<LogisticHyper>,
    pub random_forest: Option<ForestHyper>,
    pub svm: Option<SvmHyper>,
    pub fuzzy_svm: Option<SvmHyper>,
    pub gradient_boosting: Option<BoostingHyper>,
    pub stacking: Option<StackingConfig>,
}

impl ModelConfig {
    pub fn load(path: &Path) -> Result<ModelConfig> {
        let text = read(path)?;
        let config: ModelConfig = toml::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
        check_version(path, config.version)?;
        Ok(config)
    }

    /// Resolves a short model name (`lr`, `rf`, `svm`, `fsvm`, `gb`, `stack`).
    pub fn estimator(&self, name: &str) -> Result<EstimatorSpec> {
        let spec = match name.trim().to_ascii_lowercase().as_str() {
            "lr" => ModelSpec::LogisticRegression(self.logistic_regression.unwrap_or_default()),
            "rf" => ModelSpec::RandomForest(self.random_forest.unwrap_or_default()),
            "svm" => ModelSpec::Svm(self.svm.unwrap_or_default()),
            "fsvm" => ModelSpec::FuzzySvm(self.fuzzy_svm.unwrap_or_default()),
            "gb" => ModelSpec::GradientBoosting(self.gradient_boosting.unwrap_or_default()),
            "stack" => {
                let config = self.stacking.clone().unwrap_or_default();
                config.validate()?;
                return Ok(EstimatorSpec::Stacking(config));
            }
            other => {
                return Err(UsageError(format!(
                    "unknown model {other:?} (expected lr, rf, svm, fsvm, gb or stack)"
                ))
                .into())
            }
        };
        Ok(EstimatorSpec::Single(spec))
    }
}

/// Generator profiles: a `version` key plus optional `[corona]`,
/// `[floating]`, `[particle]` and `[void]` tables whose keys override the
/// default profile of that class.
pub fn load_profiles(path: &Path) -> Result<ClassProfiles> {
    let text = read(path)?;
    let usage = |e: &dyn std::fmt::Display| UsageError(format!("{}: {e}", path.display()));
    let mut table: toml::Table = text.parse().map_err(|e| usage(&e))?;
    let version = table.remove("version").ok_or_else(|| usage(&"missing version key"))?;
    let version = version
        .as_integer()
        .and_then(|v| u32::try_from(v).ok())
        .ok_or_else(|| usage(&"version must be a positive integer"))?;
    check_version(path, version)?;

    let defaults = ClassProfiles::default();
    let mut merged = toml::Table::try_from(&defaults).context("serializing default profiles")?;
    for (key, value) in table {
        let Some(toml::Value::Table(base)) = merged.get_mut(&key) else {
            return Err(usage(&format!(
                "unknown section {key:?} (expected {})",
                PdLabel::ALL.map(|l| l.name()).join(", ")
            ))
            .into());
        };
        let toml::Value::Table(overrides) = value else {
            return Err(usage(&format!("{key} must be a table")).into());
        };
        for (k, v) in overrides {
            base.insert(k, v);
        }
    }
    let profiles: ClassProfiles = merged.try_into().map_err(|e| usage(&e))?;
    for label in PdLabel::ALL {
        profiles
            .get(label)
            .validate()
            .map_err(|e| usage(&format!("[{}] {e}", label.name())))?;
    }
    Ok(profiles)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        prpd_core::Error::Io {
            path: path.to_path_buf(),
            source: e,
        }
        .into()
    })
}

fn check_version(path: &Path, version: u32) -> Result<()> {
    if version != CONFIG_VERSION {
        return Err(UsageError(format!(
            "{}: unsupported config version {version} (expected {CONFIG_VERSION})",
            path.display()
        ))
        .into());
    }
    Ok(())
}
