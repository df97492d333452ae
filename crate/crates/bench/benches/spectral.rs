use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use htspec::spectral::{eig_dense_symmetric, eigvals_dense_symmetric, top_eigs};
use htspec::LanczosOptions;
use htspec_bench::{covariance_matrix, hermitian_matrix};

fn dense(c: &mut Criterion) {
    let mut group = c.benchmark_group("dense");
    group.sample_size(10);
    for n in [64, 256, 512] {
        let gram = covariance_matrix(8.0, 1.0, n, 1).gram_dense();
        group.bench_with_input(BenchmarkId::new("eigenvalues", n), &gram, |b, a| {
            b.iter(|| eigvals_dense_symmetric(a).unwrap());
        });
        group.bench_with_input(BenchmarkId::new("eigenpairs", n), &gram, |b, a| {
            b.iter(|| eig_dense_symmetric(a).unwrap());
        });
    }
    group.finish();
}

fn lanczos(c: &mut Criterion) {
    let mut group = c.benchmark_group("lanczos_top5");
    group.sample_size(10);
    let opts = LanczosOptions::default();
    for n in [512, 2048, 8192] {
        // Heavy tails: well separated extremes, fast convergence.
        let heavy = covariance_matrix(1.0, 0.5, n, 2);
        group.bench_with_input(BenchmarkId::new("gram_alpha1", n), &heavy, |b, m| {
            b.iter(|| top_eigs(m, 5, &opts).unwrap());
        });
        // Light tails: eigenvalues pile up at the bulk edge.
        let light = covariance_matrix(8.0, 0.5, n, 3);
        group.bench_with_input(BenchmarkId::new("gram_alpha8", n), &light, |b, m| {
            b.iter(|| top_eigs(m, 5, &opts).unwrap());
        });
        let sym = hermitian_matrix(8.0, 0.5, n, 4);
        group.bench_with_input(BenchmarkId::new("symmetric_alpha8", n), &sym, |b, m| {
            b.iter(|| top_eigs(m, 5, &opts).unwrap());
        });
    }
    group.finish();
}

criterion_group!(benches, dense, lanczos);
criterion_main!(benches);
