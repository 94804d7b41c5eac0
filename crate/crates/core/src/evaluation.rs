//! Repeated-split evaluation: stratified train/validation splits, per-class
//! recall and precision, and mean ± standard deviation over trials.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureKind, FeatureMatrix};
use crate::learners::{Classifier, EstimatorSpec};
use crate::seed::{derive_seed, rng_from_seed, stream};
use crate::signal::{Dataset, PdLabel, NUM_CLASSES};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub stratified: bool,
    pub trials: usize,
    pub master_seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.6,
            stratified: true,
            trials: 100,
            master_seed: 0,
        }
    }
}

/// Train and validation indices, each sorted ascending.
pub type Split = (Vec<usize>, Vec<usize>);

/// Per class, `round(fraction · count)` samples go to training (clamped so
/// both sides keep at least one sample).
pub fn stratified_split(labels: &[PdLabel], fraction: f64, seed: u64) -> Result<Split> {
    check_fraction(fraction)?;
    let mut rng = rng_from_seed(seed);
    let (mut train, mut valid) = (Vec::new(), Vec::new());
    for class in PdLabel::ALL {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 {
            return Err(Error::InsufficientClassSamples {
                label: class,
                count: members.len(),
                needed: 2,
            });
        }
        members.shuffle(&mut rng);
        let n_train = ((fraction * members.len() as f64).round() as usize).clamp(1, members.len() - 1);
        train.extend_from_slice(&members[..n_train]);
        valid.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    valid.sort_unstable();
    Ok((train, valid))
}

/// Class-blind split of `round(fraction · n)` training samples.
pub fn random_split(n: usize, fraction: f64, seed: u64) -> Result<Split> {
    check_fraction(fraction)?;
    if n < 2 {
        return Err(Error::EmptyData);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_from_seed(seed));
    let n_train = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut train = idx[..n_train].to_vec();
    let mut valid = idx[n_train..].to_vec();
    train.sort_unstable();
    valid.sort_unstable();
    Ok((train, valid))
}

fn check_fraction(fraction: f64) -> Result<()> {
    if fraction > 0.0 && fraction < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "train fraction must lie in (0, 1), got {fraction}"
        )))
    }
}

pub type Confusion = [[u64; NUM_CLASSES]; NUM_CLASSES];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub accuracy: f64,
    pub recall: [f64; NUM_CLASSES],
    pub precision: [f64; NUM_CLASSES],
    /// Classes absent from the truth; their recall is reported as 0.
    pub recall_undefined: [bool; NUM_CLASSES],
    /// Classes never predicted; their precision is reported as 0.
    pub precision_undefined: [bool; NUM_CLASSES],
    /// `confusion[truth][predicted]`.
    pub confusion: Confusion,
}

pub fn score(predictions: &[PdLabel], truth: &[PdLabel]) -> Result<Score> {
    if predictions.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: truth.len(),
        });
    }
    let mut confusion = [[0u64; NUM_CLASSES]; NUM_CLASSES];
    for (p, t) in predictions.iter().zip(truth) {
        confusion[t.code()][p.code()] += 1;
    }
    let correct: u64 = (0..NUM_CLASSES).map(|k| confusion[k][k]).sum();
    let accuracy = if truth.is_empty() {
        0.0
    } else {
        correct as f64 / truth.len() as f64
    };
    let mut s = Score {
        accuracy,
        recall: [0.0; NUM_CLASSES],
        precision: [0.0; NUM_CLASSES],
        recall_undefined: [false; NUM_CLASSES],
        precision_undefined: [false; NUM_CLASSES],
        confusion,
    };
    for k in 0..NUM_CLASSES {
        let actual: u64 = confusion[k].iter().sum();
        let predicted: u64 = confusion.iter().map(|r| r[k]).sum();
        if actual == 0 {
            s.recall_undefined[k] = true;
        } else {
            s.recall[k] = confusion[k][k] as f64 / actual as f64;
        }
        if predicted == 0 {
            s.precision_undefined[k] = true;
        } else {
            s.precision[k] = confusion[k][k] as f64 / predicted as f64;
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation (divisor n).
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> MeanStd {
        if values.is_empty() {
            return MeanStd { mean: 0.0, std: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        MeanStd { mean, std: var.sqrt() }
    }
}

/// Results of one model on one feature set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model: String,
    pub spec: Option<EstimatorSpec>,
    pub features: FeatureKind,
    pub trials: usize,
    pub accuracy: MeanStd,
    pub recall: [MeanStd; NUM_CLASSES],
    pub precision: [MeanStd; NUM_CLASSES],
    /// Summed over trials, `confusion[truth][predicted]`.
    pub confusion: Confusion,
    pub trial_accuracy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub version: u32,
    pub split: SplitSpec,
    pub threshold: f64,
    pub entries: Vec<ModelReport>,
}

impl EvalReport {
    pub fn new(split: SplitSpec, threshold: f64) -> Self {
        EvalReport {
            version: REPORT_VERSION,
            split,
            threshold,
            entries: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Accuracy ± std by PD type and in total, one line per entry.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let name_w = self.entries.iter().map(|e| e.model.len()).max().unwrap_or(5).max(5);
        let feat_w = self
            .entries
            .iter()
            .map(|e| e.features.to_string().len())
            .max()
            .unwrap_or(8)
            .max(8);
        let _ = write!(out, "{:name_w$}  {:feat_w$}", "Model", "Features");
        for l in PdLabel::ALL {
            let mut h = l.name().to_string();
            h[..1].make_ascii_uppercase();
            let _ = write!(out, "  {h:<16}");
        }
        out.push_str("  Total\n");
        for e in &self.entries {
            let _ = write!(out, "{:name_w$}  {:feat_w$}", e.model, e.features.to_string());
            for r in e.recall.iter().chain(std::iter::once(&e.accuracy)) {
                let _ = write!(out, "  {:<16}", format!("{:.4} ± {:.3}", r.mean, r.std));
            }
            out.truncate(out.trim_end().len());
            out.push('\n');
        }
        out
    }
}

struct TrialOutcome {
    score: Score,
}

/// Runs the repeated-split protocol with a caller-supplied fitting routine.
/// Trial `t` splits with `derive(master, split, t)` and fits with
/// `derive(master, fit, t)`; results are reduced in trial order.
pub fn run_trials_with<F, C>(name: &str, features: &FeatureMatrix, split: &SplitSpec, fit: F) -> Result<ModelReport>
where
    F: Fn(&[Vec<f64>], &[PdLabel], u64) -> Result<C> + Sync,
    C: Classifier,
{
    let labels = features.labels()?;
    if labels.is_empty() {
        return Err(Error::EmptyData);
    }
    if split.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let outcomes = (0..split.trials)
        .into_par_iter()
        .map(|t| {
            let split_seed = derive_seed(split.master_seed, stream::TRIAL_SPLIT, t as u64);
            let fit_seed = derive_seed(split.master_seed, stream::TRIAL_FIT, t as u64);
            let (train, valid) = if split.stratified {
                stratified_split(&labels, split.train_fraction, split_seed)?
            } else {
                random_split(labels.len(), split.train_fraction, split_seed)?
            };
            let tx: Vec<Vec<f64>> = train.iter().map(|&i| features.rows[i].clone()).collect();
            let ty: Vec<PdLabel> = train.iter().map(|&i| labels[i]).collect();
            let vx: Vec<Vec<f64>> = valid.iter().map(|&i| features.rows[i].clone()).collect();
            let vy: Vec<PdLabel> = valid.iter().map(|&i| labels[i]).collect();
            let model = fit(&tx, &ty, fit_seed)?;
            let pred = model.predict(&vx)?;
            Ok(TrialOutcome {
                score: score(&pred, &vy)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let trial_accuracy: Vec<f64> = outcomes.iter().map(|o| o.score.accuracy).collect();
    let per_class = |get: fn(&Score) -> [f64; NUM_CLASSES]| {
        let mut out = [MeanStd { mean: 0.0, std: 0.0 }; NUM_CLASSES];
        for (k, o) in out.iter_mut().enumerate() {
            let v: Vec<f64> = outcomes.iter().map(|t| get(&t.score)[k]).collect();
            *o = MeanStd::of(&v);
        }
        out
    };
    let mut confusion = [[0u64; NUM_CLASSES]; NUM_CLASSES];
    for o in &outcomes {
        for (row, add) in confusion.iter_mut().zip(&o.score.confusion) {
            for (c, a) in row.iter_mut().zip(add) {
                *c += a;
            }
        }
    }
    Ok(ModelReport {
        model: name.to_string(),
        spec: None,
        features: features.kind,
        trials: split.trials,
        accuracy: MeanStd::of(&trial_accuracy),
        recall: per_class(|s| s.recall),
        precision: per_class(|s| s.precision),
        confusion,
        trial_accuracy,
    })
}

pub fn run_trials_on_features(
    spec: &EstimatorSpec,
    features: &FeatureMatrix,
    split: &SplitSpec,
) -> Result<ModelReport> {
    let mut report = run_trials_with(&spec.name(), features, split, |x, y, seed| spec.fit(x, y, seed))?;
    report.spec = Some(spec.clone());
    Ok(report)
}

pub fn run_trials(
    spec: &EstimatorSpec,
    kind: FeatureKind,
    dataset: &Dataset,
    split: &SplitSpec,
    threshold: f64,
) -> Result<ModelReport> {
    let features = extract_features(dataset, kind, threshold)?;
    run_trials_on_features(spec, &features, split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{ClassProbs, ModelSpec};
    use PdLabel::*;

    #[test]
    fn split_counts_follow_rounding_rule() {
        let labels: Vec<PdLabel> = (0..10).map(|i| if i < 5 { Corona } else { Void }).collect();
        let (train, valid) = stratified_split(&labels, 0.6, 3).unwrap();
        assert_eq!(train.iter().filter(|&&i| labels[i] == Corona).count(), 3);
        assert_eq!(train.iter().filter(|&&i| labels[i] == Void).count(), 3);
        assert_eq!(valid.len(), 4);
        assert_eq!(
            (train.clone(), valid.clone()),
            stratified_split(&labels, 0.6, 3).unwrap()
        );

        let mut labels = Vec::new();
        for (l, n) in PdLabel::ALL.iter().zip([85, 99, 80, 64]) {
            labels.extend(std::iter::repeat_n(*l, n));
        }
        let (train, valid) = stratified_split(&labels, 0.6, 11).unwrap();
        let counts: Vec<usize> = PdLabel::ALL
            .iter()
            .map(|l| train.iter().filter(|&&i| labels[i] == *l).count())
            .collect();
        assert_eq!(counts, vec![51, 59, 48, 38]);
        let mut all: Vec<usize> = train.iter().chain(&valid).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..328).collect::<Vec<_>>());
    }

    #[test]
    fn split_errors() {
        assert!(matches!(
            stratified_split(&[Corona, Void, Void], 0.6, 0),
            Err(Error::InsufficientClassSamples {
                label: Corona,
                count: 1,
                ..
            })
        ));
        assert!(stratified_split(&[Corona, Corona], 1.0, 0).is_err());
    }

    #[test]
    fn perfect_score() {
        let s = score(&[Corona, Floating, Particle, Void], &[Corona, Floating, Particle, Void]).unwrap();
        assert_eq!(s.accuracy, 1.0);
        assert_eq!(s.recall, [1.0; 4]);
    }

    #[test]
    fn void_taken_for_floating() {
        let s = score(&[Floating, Floating], &[Void, Void]).unwrap();
        assert_eq!(s.recall[Void.code()], 0.0);
        assert_eq!(s.confusion[Void.code()][Floating.code()], 2);
        assert!(s.precision_undefined[Void.code()]);
        assert!(s.recall_undefined[Corona.code()]);
        assert_eq!(s.accuracy, 0.0);
    }

    #[test]
    fn corona_recall_from_confusion() {
        let s = score(&[Corona, Corona, Corona, Floating], &[Corona; 4]).unwrap();
        assert_eq!(s.recall[0], 0.75);
        assert_eq!(s.precision[0], 1.0);
        assert!(score(&[Corona], &[]).is_err());
    }

    struct Constant(usize);

    impl Classifier for Constant {
        fn width(&self) -> usize {
            self.0
        }
        fn proba_row(&self, _: &[f64]) -> ClassProbs {
            [1.0, 0.0, 0.0, 0.0]
        }
    }

    fn corpus_like() -> FeatureMatrix {
        let mut labels = Vec::new();
        for (l, n) in PdLabel::ALL.iter().zip([85, 99, 80, 64]) {
            labels.extend(std::iter::repeat_n(Some(*l), n));
        }
        FeatureMatrix {
            kind: FeatureKind::Meta,
            ids: (0..328).map(|i| i.to_string()).collect(),
            rows: (0..328).map(|i| vec![i as f64, (i % 7) as f64, 1.0]).collect(),
            labels,
        }
    }

    #[test]
    fn constant_classifier_scores_class_share() {
        let fm = corpus_like();
        let split = SplitSpec {
            trials: 5,
            master_seed: 1,
            ..Default::default()
        };
        let r = run_trials_with("const", &fm, &split, |_, _, _| Ok(Constant(3))).unwrap();
        // validation holds 34 of 132 corona samples in every trial
        assert!((r.accuracy.mean - 34.0 / 132.0).abs() < 1e-12);
        assert_eq!(r.accuracy.std, 0.0);
        assert_eq!(r.recall[0].mean, 1.0);
        let rows: Vec<u64> = r.confusion.iter().map(|row| row.iter().sum()).collect();
        assert_eq!(rows, vec![34 * 5, 40 * 5, 32 * 5, 26 * 5]);
    }

    #[test]
    fn single_trial_has_zero_spread_and_is_reproducible() {
        let fm = corpus_like();
        let split = SplitSpec {
            trials: 1,
            master_seed: 4,
            ..Default::default()
        };
        let spec = EstimatorSpec::Single(ModelSpec::logistic());
        let r = run_trials_on_features(&spec, &fm, &split).unwrap();
        assert_eq!(r.accuracy.std, 0.0);
        assert!(r.recall.iter().chain(&r.precision).all(|m| m.std == 0.0));
        let trace: f64 =
            (0..4).map(|k| r.confusion[k][k] as f64).sum::<f64>() / r.confusion.iter().flatten().sum::<u64>() as f64;
        assert!((trace - r.accuracy.mean).abs() < 1e-12);

        let split = SplitSpec {
            trials: 4,
            master_seed: 4,
            ..Default::default()
        };
        let a = run_trials_on_features(&spec, &fm, &split).unwrap();
        let b = run_trials_on_features(&spec, &fm, &split).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn table_has_type_columns() {
        let mut report = EvalReport::new(SplitSpec::default(), 0.4);
        let fm = corpus_like();
        let split = SplitSpec {
            trials: 2,
            ..Default::default()
        };
        report
            .entries
            .push(run_trials_with("const", &fm, &split, |_, _, _| Ok(Constant(3))).unwrap());
        let table = report.render_table();
        let header = table.lines().next().unwrap();
        for col in ["Corona", "Floating", "Particle", "Void", "Total"] {
            assert!(header.contains(col));
        }
        assert!(table.lines().nth(1).unwrap().contains("1.0000 ± 0.000"));
    }

    #[test]
    fn population_std() {
        let m = MeanStd::of(&[1.0, 3.0]);
        assert_eq!((m.mean, m.std), (2.0, 1.0));
    }
}
