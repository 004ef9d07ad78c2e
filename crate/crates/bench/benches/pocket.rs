use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, Criterion};
use nsb_bench::random_problem;
use nsb_core::{lemonade, train, TrainerConfig, TrainingSource};

fn pocket(c: &mut Criterion) {
    let lem = lemonade();
    let random = random_problem(10, 20, 3);
    let mut group = c.benchmark_group("pocket");
    group.sample_size(10).measurement_time(Duration::from_secs(5));
    group.bench_function("lemonade_stream_20k", |b| {
        b.iter(|| train(TrainingSource::Problem(black_box(&lem)), &TrainerConfig::new(20_000, 1)).unwrap())
    });
    group.bench_function("lemonade_ratchet_20k_d2k", |b| {
        let cfg = TrainerConfig { ratchet: true, dataset_size: Some(2_000), ..TrainerConfig::new(20_000, 1) };
        b.iter(|| train(TrainingSource::Problem(black_box(&lem)), &cfg).unwrap())
    });
    group.bench_function("random_10x20_stream_20k", |b| {
        b.iter(|| train(TrainingSource::Problem(black_box(&random)), &TrainerConfig::new(20_000, 1)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, pocket);
criterion_main!(benches);
