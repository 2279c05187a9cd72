use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use evt_bench::{pareto, sample};
use evt_core::{bridge, estimators};

fn bench_sums(c: &mut Criterion) {
    let batch = sample(100_000, 1);
    let (k, ell) = (1000, 10);
    let mut g = c.benchmark_group("windowed-sums");
    g.bench_function("t2_k1000", |b| {
        b.iter(|| estimators::t2(black_box(&batch), k, ell).unwrap())
    });
    g.bench_function("a1_fast_k1000", |b| {
        b.iter(|| estimators::a1(black_box(&batch), k, ell).unwrap())
    });
    g.bench_function("a1_naive_k1000", |b| {
        b.iter(|| estimators::a1_naive(black_box(&batch), k, ell).unwrap())
    });
    g.finish();
}

fn bench_sampling(c: &mut Criterion) {
    let model = pareto(1.0);
    let mut g = c.benchmark_group("sampling");
    g.sample_size(20);
    g.bench_function("draw_sort_n1e5", |b| {
        let mut seed = 0u64;
        b.iter_batched(
            || {
                seed += 1;
                seed
            },
            |s| model.draw(100_000, s).unwrap(),
            BatchSize::SmallInput,
        )
    });
    g.bench_function("quantile_grid_4096", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for i in 1..=4096 {
                acc += model.quantile_g(i as f64 / 8192.0).unwrap();
            }
            black_box(acc)
        })
    });
    g.finish();
}

fn bench_bridge(c: &mut Criterion) {
    let model = pareto(1.0);
    let mut g = c.benchmark_group("bridge");
    g.sample_size(10);
    g.bench_function("functional_batch_256", |b| {
        b.iter(|| bridge::functional_batch(black_box(&model), 1_000_000, 1000, 10, 256, 3).unwrap())
    });
    g.finish();
}

criterion_group!(benches, bench_sums, bench_sampling, bench_bridge);
criterion_main!(benches);
