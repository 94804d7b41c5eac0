//! Shared fixtures for the criterion benchmarks.

use prpd_core::features::{extract_features, FeatureKind, FeatureMatrix, DEFAULT_THRESHOLD};
use prpd_core::synthetic::{generate_corpus, SyntheticSpec};
use prpd_core::{Dataset, PdLabel};

pub fn corpus() -> Dataset {
    generate_corpus(&SyntheticSpec::new(1)).expect("default corpus")
}

pub fn features(dataset: &Dataset, kind: FeatureKind) -> (FeatureMatrix, Vec<PdLabel>) {
    let fm = extract_features(dataset, kind, DEFAULT_THRESHOLD).expect("features");
    let labels = fm.labels().expect("labelled corpus");
    (fm, labels)
}
