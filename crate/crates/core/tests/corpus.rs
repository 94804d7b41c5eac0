use prpd_core::evaluation::run_trials_with;
use prpd_core::features::{align_phases, extract_features};
use prpd_core::model_file::ModelFile;
use prpd_core::signal::{load_dataset, save_dataset};
use prpd_core::synthetic::generate_corpus;
use prpd_core::{
    ClassProbs, Classifier, EstimatorSpec, FeatureKind, PdLabel, SplitSpec, StackingConfig, SyntheticSpec,
    DEFAULT_THRESHOLD,
};

fn corpus() -> prpd_core::Dataset {
    generate_corpus(&SyntheticSpec::new(4)).unwrap()
}

#[test]
fn corpus_survives_a_file_round_trip() {
    let ds = corpus();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.csv");
    save_dataset(&ds, &path).unwrap();
    let back = load_dataset(&path, true).unwrap();
    assert_eq!(back.class_counts(), [85, 99, 80, 64]);
    assert_eq!(back, ds);
}

#[test]
fn meta_clusters_have_the_expected_layout() {
    let ds = corpus();
    let fm = extract_features(&ds, FeatureKind::Meta, DEFAULT_THRESHOLD).unwrap();
    let labels = fm.labels().unwrap();
    let column = |label: PdLabel, j: usize| -> Vec<f64> {
        fm.rows
            .iter()
            .zip(&labels)
            .filter(|(_, l)| **l == label)
            .map(|(r, _)| r[j])
            .collect()
    };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let totals: Vec<f64> = PdLabel::ALL.iter().map(|&l| mean(&column(l, 0))).collect();
    let floating = PdLabel::Floating.code();
    assert!(totals
        .iter()
        .enumerate()
        .all(|(k, t)| k == floating || *t < totals[floating]));

    let particle_band = column(PdLabel::Particle, 2);
    let others_min = [PdLabel::Corona, PdLabel::Floating, PdLabel::Void]
        .iter()
        .flat_map(|&l| column(l, 2))
        .fold(f64::INFINITY, f64::min);
    let particle_max = particle_band.iter().copied().fold(0.0, f64::max);
    assert!(
        particle_max < others_min,
        "particle band {particle_max} vs others {others_min}"
    );
}

#[test]
fn aligned_rows_ignore_a_prior_rotation() {
    let ds = corpus();
    let rotated = ds.map_samples(|s| s.rotate_phases(s.id().len() * 7 + 3));
    let a = extract_features(&ds, FeatureKind::AlignedPhaseMagnitude, DEFAULT_THRESHOLD).unwrap();
    let b = extract_features(&rotated, FeatureKind::AlignedPhaseMagnitude, DEFAULT_THRESHOLD).unwrap();
    let p = extract_features(&rotated, FeatureKind::PhaseMagnitude, DEFAULT_THRESHOLD).unwrap();
    let q = extract_features(&ds, FeatureKind::PhaseMagnitude, DEFAULT_THRESHOLD).unwrap();
    assert_eq!(a.rows, b.rows);
    assert_ne!(p.rows, q.rows);

    let pre_aligned = ds.map_samples(align_phases);
    let c = extract_features(&pre_aligned, FeatureKind::PhaseMagnitude, DEFAULT_THRESHOLD).unwrap();
    assert_eq!(c.rows, a.rows);
}

struct AlwaysCorona;

impl Classifier for AlwaysCorona {
    fn width(&self) -> usize {
        3
    }

    fn proba_row(&self, _: &[f64]) -> ClassProbs {
        [1.0, 0.0, 0.0, 0.0]
    }
}

#[test]
fn constant_classifier_scores_the_corona_share() {
    let fm = extract_features(&corpus(), FeatureKind::Meta, DEFAULT_THRESHOLD).unwrap();
    let split = SplitSpec {
        trials: 5,
        ..SplitSpec::default()
    };
    let report = run_trials_with("constant", &fm, &split, |_, _, _| Ok(AlwaysCorona)).unwrap();
    // validation holds 85 - 51 corona of 328 - 196 samples
    assert_eq!(report.accuracy.mean, 34.0 / 132.0);
    assert_eq!(report.accuracy.std, 0.0);
}

#[test]
fn stacking_model_file_reproduces_predictions() {
    let ds = corpus();
    let fm = extract_features(&ds, FeatureKind::Meta, DEFAULT_THRESHOLD).unwrap();
    let spec = EstimatorSpec::Stacking(StackingConfig::default());
    let model = spec.fit(&fm.rows, &fm.labels().unwrap(), 2).unwrap();
    let expected = model.predict_proba(&fm.rows).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stack.json");
    ModelFile::new(FeatureKind::Meta, DEFAULT_THRESHOLD, ds.dims(), model)
        .save(&path)
        .unwrap();
    let loaded = ModelFile::load(&path).unwrap();
    assert_eq!(loaded.classify(&ds).unwrap(), expected);
}
