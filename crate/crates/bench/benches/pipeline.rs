use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use prpd_bench::{corpus, features};
use prpd_core::features::{extract_meta, FeatureKind, DEFAULT_THRESHOLD};
use prpd_core::{ModelSpec, StackingConfig};

fn feature_extraction(c: &mut Criterion) {
    let ds = corpus();
    let sample = &ds.samples()[0];
    c.bench_function("extract_meta", |b| {
        b.iter(|| extract_meta(black_box(sample), DEFAULT_THRESHOLD))
    });
    c.bench_function("aligned_features_corpus", |b| {
        b.iter(|| features(black_box(&ds), FeatureKind::AlignedPhaseMagnitude))
    });
}

fn model_fits(c: &mut Criterion) {
    let ds = corpus();
    let (meta, labels) = features(&ds, FeatureKind::Meta);
    let (aligned, _) = features(&ds, FeatureKind::AlignedPhaseMagnitude);
    let mut group = c.benchmark_group("fit");
    group.sample_size(20);
    for (name, spec) in [
        ("logistic_meta", ModelSpec::logistic()),
        ("forest_meta", ModelSpec::forest()),
        ("svm_meta", ModelSpec::svm()),
        ("boosting_meta", ModelSpec::boosting()),
    ] {
        group.bench_function(name, |b| {
            b.iter(|| spec.fit(black_box(&meta.rows), &labels, 1).unwrap())
        });
    }
    group.bench_function("svm_aligned", |b| {
        b.iter(|| ModelSpec::svm().fit(black_box(&aligned.rows), &labels, 1).unwrap())
    });
    group.bench_function("stacking_meta", |b| {
        b.iter(|| {
            prpd_core::ensemble::fit_stacking(&StackingConfig::default(), black_box(&meta.rows), &labels, 1).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, feature_extraction, model_fits);
criterion_main!(benches);
