use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use retest_core::evaluation::{evaluate, EvaluationConfig};
use retest_core::repeatability::limits_of_agreement;
use retest_core::rng::substream;
use retest_core::simlab::{generate_cohort, predict_records, CohortConfig, MlpConfig, MlpModel, Split};
use retest_core::stats::{bootstrap_metric, shapiro_wilk};
use retest_core::{HeadKind, Inference, Result};

fn sample(n: usize) -> Vec<f64> {
    (0..n).map(|i| ((i * 7919) % 1000) as f64 / 100.0 - 5.0).collect()
}

fn mean(units: &[&f64]) -> Result<f64> {
    Ok(units.iter().copied().sum::<f64>() / units.len() as f64)
}

fn stats(c: &mut Criterion) {
    let diffs = sample(2000);
    c.bench_function("limits_of_agreement/2000", |b| b.iter(|| limits_of_agreement(black_box(&diffs))));
    c.bench_function("shapiro_wilk/500", |b| b.iter(|| shapiro_wilk(black_box(&diffs[..500]))));
    c.bench_function("bootstrap_mean/200x500", |b| {
        b.iter(|| bootstrap_metric(black_box(&diffs[..200]), mean, 500, 1))
    });
}

fn model(c: &mut Criterion) {
    let cfg = MlpConfig {
        input_dim: 16,
        hidden: vec![64, 64],
        dropout_rate: 0.5,
        seed: 3,
    };
    let net = MlpModel::new(&cfg, HeadKind::MultiClass(5)).unwrap();
    let x = sample(16);
    let mut rng = substream(0, 0);
    c.bench_function("mlp_forward_mc/64x64", |b| b.iter(|| net.forward(black_box(&x), true, &mut rng)));
}

fn pipeline(c: &mut Criterion) {
    let cohort = generate_cohort(&CohortConfig {
        n_subjects: 200,
        ..CohortConfig::with_classes(3)
    })
    .unwrap();
    let head = HeadKind::Ordinal(3);
    let net = MlpModel::new(
        &MlpConfig {
            input_dim: 16,
            hidden: vec![32],
            dropout_rate: 0.3,
            seed: 1,
        },
        head,
    )
    .unwrap();
    let records = predict_records(&net, &cohort, Split::Test, 50, 2, false).unwrap();
    let labels = cohort.labels(Split::Test, head);
    let cfg = EvaluationConfig {
        inference: Inference::MonteCarlo(50),
        ..EvaluationConfig::default()
    };
    c.bench_function("evaluate/140_subjects_n50", |b| b.iter(|| evaluate(black_box(&records), &labels, &cfg)));
}

criterion_group!(benches, stats, model, pipeline);
criterion_main!(benches);
