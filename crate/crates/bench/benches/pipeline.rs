use std::sync::Arc;

use c2plus::tracenorm::estimate_norm_on;
use c2plus::{build_decomposition, Config, Interpolant, Point2};
use c2plus_bench::unit_density;
use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};

fn decomposition(c: &mut Criterion) {
    let cfg = Config::default();
    let mut group = c.benchmark_group("decomposition");
    group.sample_size(10);
    for n in [100, 1000] {
        let (pts, _) = unit_density(n, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &pts, |b, pts| {
            b.iter(|| build_decomposition(pts, &cfg).unwrap())
        });
    }
    group.finish();
}

fn norm_estimate(c: &mut Criterion) {
    let cfg = Config::default();
    let mut group = c.benchmark_group("estimate_norm");
    group.sample_size(10);
    for n in [20, 50] {
        let (pts, vals) = unit_density(n, 2);
        let dec = build_decomposition(&pts, &cfg).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &vals, |b, vals| {
            b.iter(|| estimate_norm_on(&dec, vals, &cfg).unwrap())
        });
    }
    group.finish();
}

fn query(c: &mut Criterion) {
    let cfg = Config::default();
    let n = 1000;
    let (pts, vals) = unit_density(n, 3);
    let dec = Arc::new(build_decomposition(&pts, &cfg).unwrap());
    let side = (n as f64).sqrt();
    let probes: Vec<Point2> =
        (0..64).map(|k| Point2::new((k % 8) as f64 * side / 8.0 + 0.3, (k / 8) as f64 * side / 8.0 + 0.7)).collect();
    let mut group = c.benchmark_group("query");
    group.sample_size(10);

    // Fresh interpolant each batch: pays for the local jets and pieces.
    group.bench_function("cold", |b| {
        b.iter_batched(
            || Interpolant::with_decomposition(Arc::clone(&dec), vals.clone(), 1.0, &cfg).unwrap(),
            |it| it.query(&probes[0]).unwrap(),
            BatchSize::PerIteration,
        )
    });

    // Pieces already cached: measures the neighbor lookup and blending only.
    let warm = Interpolant::with_decomposition(Arc::clone(&dec), vals.clone(), 1.0, &cfg).unwrap();
    for p in &probes {
        warm.query(p).unwrap();
    }
    let mut k = 0;
    group.bench_function("warm", |b| {
        b.iter(|| {
            k = (k + 1) % probes.len();
            warm.query(&probes[k]).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, decomposition, norm_estimate, query);
criterion_main!(benches);
