// Parallel vs sequential timings of the hot paths. With the default
// `parallel` feature each case runs on the global rayon pool and on a
// one-thread pool; `--no-default-features` builds only the sequential twin.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use kineq_core::measure::grid::convolve_grid;
use kineq_core::sampler::{empirical_apply, RngStream};
use kineq_core::{CollisionModel, DiscreteMeasure, GridConfig, ModelSpec};

fn spread(n: usize) -> DiscreteMeasure {
    let locs: Vec<f64> = (0..n).map(|k| 4.0 * (k as f64 + 0.5) / n as f64).collect();
    let w: Vec<f64> = locs.iter().map(|x| (-x).exp()).collect();
    let s: f64 = w.iter().sum();
    let w: Vec<f64> = w.iter().map(|v| v / s).collect();
    DiscreteMeasure::new(&locs, &w).unwrap()
}

#[cfg(feature = "parallel")]
fn modes() -> Vec<(&'static str, Option<rayon::ThreadPool>)> {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    vec![("parallel", None), ("sequential", Some(one))]
}

#[cfg(not(feature = "parallel"))]
fn modes() -> Vec<(&'static str, Option<()>)> {
    vec![("sequential", None)]
}

#[cfg(feature = "parallel")]
fn run<R: Send>(pool: &Option<rayon::ThreadPool>, f: impl FnOnce() -> R + Send) -> R {
    match pool {
        Some(p) => p.install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run<R>(_: &Option<()>, f: impl FnOnce() -> R) -> R {
    f()
}

fn bench(c: &mut Criterion) {
    let model = CollisionModel::new(ModelSpec::tjon_wu(64).with_budget(1024)).unwrap();
    let mu = spread(1024);
    let wide = spread(2048);
    let cfg = GridConfig::default();
    let rng = RngStream::new(7, 0);

    let mut g = c.benchmark_group("operator");
    g.sample_size(10);
    for (name, pool) in modes() {
        g.bench_function(BenchmarkId::new("apply", name), |b| {
            b.iter(|| run(&pool, || model.apply(black_box(&mu)).unwrap()))
        });
        g.bench_function(BenchmarkId::new("convolve_grid", name), |b| {
            b.iter(|| run(&pool, || convolve_grid(black_box(&wide), &wide, 4096, &cfg).unwrap()))
        });
        g.bench_function(BenchmarkId::new("empirical_apply", name), |b| {
            b.iter(|| run(&pool, || empirical_apply(&model, black_box(&mu), 100_000, &rng).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
