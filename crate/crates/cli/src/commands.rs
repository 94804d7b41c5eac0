use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use prpd_core::evaluation::run_trials_on_features;
use prpd_core::features::extract_features;
use prpd_core::learners::argmax;
use prpd_core::model_file::ModelFile;
use prpd_core::render::heatmap_pgm;
use prpd_core::signal::{csv_field, load_dataset_with_dims, save_dataset};
use prpd_core::synthetic::{generate_corpus, ClassProfiles};
use prpd_core::{Dims, EvalReport, PdLabel, SplitSpec, SyntheticSpec};

use crate::config::{load_profiles, ModelConfig};
use crate::{Command, UsageError};

pub fn run(command: Command, dims: Dims) -> Result<()> {
    match command {
        Command::Generate {
            out,
            seed,
            counts,
            profile_file,
        } => {
            let profiles = match profile_file {
                Some(p) => load_profiles(&p)?,
                None => ClassProfiles::default(),
            };
            let spec = SyntheticSpec {
                counts,
                profiles,
                dims,
                master_seed: seed,
            };
            let dataset = generate_corpus(&spec)?;
            save_dataset(&dataset, &out)?;
        }
        Command::Extract {
            input,
            features,
            threshold,
            out,
        } => {
            check_threshold(threshold)?;
            let dataset = load_dataset_with_dims(&input, false, dims)?;
            extract_features(&dataset, features, threshold)?.save_csv(&out)?;
        }
        Command::Train {
            input,
            model,
            features,
            threshold,
            config,
            seed,
            out,
        } => {
            check_threshold(threshold)?;
            let spec = model_config(config.as_deref())?.estimator(&model)?;
            let dataset = load_dataset_with_dims(&input, true, dims)?;
            let fm = extract_features(&dataset, features, threshold)?;
            let estimator = spec
                .fit(&fm.rows, &fm.labels()?, seed)
                .with_context(|| format!("training {}", spec.name()))?;
            ModelFile::new(features, threshold, dims, estimator).save(&out)?;
        }
        Command::Evaluate {
            input,
            model,
            features,
            trials,
            train_frac,
            seed,
            threshold,
            config,
            report,
        } => {
            check_threshold(threshold)?;
            if trials == 0 {
                return Err(UsageError("--trials must be at least 1".into()).into());
            }
            if !(train_frac > 0.0 && train_frac < 1.0) {
                return Err(UsageError(format!("--train-frac must lie in (0, 1), got {train_frac}")).into());
            }
            let config = model_config(config.as_deref())?;
            let specs = model.iter().map(|m| config.estimator(m)).collect::<Result<Vec<_>>>()?;
            let dataset = load_dataset_with_dims(&input, true, dims)?;
            let split = SplitSpec {
                train_fraction: train_frac,
                stratified: true,
                trials,
                master_seed: seed,
            };
            let mut eval = EvalReport::new(split, threshold);
            for kind in features {
                let fm = extract_features(&dataset, kind, threshold)?;
                for spec in &specs {
                    let entry = run_trials_on_features(spec, &fm, &split)
                        .with_context(|| format!("evaluating {} on {kind}", spec.name()))?;
                    eval.entries.push(entry);
                }
            }
            print!("{}", eval.render_table());
            if let Some(path) = report {
                write(&path, eval.to_json()?.as_bytes())?;
            }
        }
        Command::Classify { input, model, out } => {
            let model = ModelFile::load(&model)?;
            let dataset = load_dataset_with_dims(&input, false, model.dims)?;
            let probs = model.classify(&dataset)?;
            let mut text = String::from("id,label");
            for l in PdLabel::ALL {
                let _ = write!(text, ",p_{}", l.name());
            }
            text.push('\n');
            for (sample, p) in dataset.samples().iter().zip(&probs) {
                let _ = write!(text, "{},{}", csv_field(sample.id()), argmax(p).name());
                for v in p {
                    let _ = write!(text, ",{v}");
                }
                text.push('\n');
            }
            write(&out, text.as_bytes())?;
        }
        Command::Render { input, id, out } => {
            let dataset = load_dataset_with_dims(&input, false, dims)?;
            let sample = dataset
                .find(&id)
                .ok_or_else(|| prpd_core::Error::UnknownId(id.clone()))?;
            write(&out, &heatmap_pgm(sample))?;
        }
    }
    Ok(())
}

fn model_config(path: Option<&Path>) -> Result<ModelConfig> {
    path.map_or_else(|| Ok(ModelConfig::default()), ModelConfig::load)
}

fn check_threshold(threshold: f64) -> Result<()> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(UsageError(format!("--threshold must lie in (0, 1), got {threshold}")).into())
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| {
        prpd_core::Error::Io {
            path: path.to_path_buf(),
            source: e,
        }
        .into()
    })
}
