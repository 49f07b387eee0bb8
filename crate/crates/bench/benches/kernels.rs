use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lake_core::analytics::{kmeans, pca2d, DEFAULT_MAX_ITER, DEFAULT_TOL};
use lake_core::tablestore::ks_statistic;
use lake_core::textproc::{cosine, tokenize};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn points(n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

fn clustering(c: &mut Criterion) {
    let mut group = c.benchmark_group("analytics");
    for n in [100, 1000] {
        let pts = points(n, 64);
        group.bench_with_input(BenchmarkId::new("kmeans_k3", n), &pts, |b, pts| {
            b.iter(|| kmeans(pts, 3, 7, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("pca2d", n), &pts, |b, pts| {
            b.iter(|| pca2d(pts).unwrap())
        });
    }
    group.finish();
}

fn measures(c: &mut Criterion) {
    let pts = points(2, 4096);
    c.bench_function("cosine_4096", |b| b.iter(|| cosine(&pts[0], &pts[1]).unwrap()));
    c.bench_function("ks_4096", |b| b.iter(|| ks_statistic(&pts[0], &pts[1]).unwrap()));
    let text = "Big data lakes keep raw documents next to their metadata. ".repeat(500);
    c.bench_function("tokenize_30k_chars", |b| b.iter(|| tokenize(&text).len()));
}

criterion_group!(benches, clustering, measures);
criterion_main!(benches);
