use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use increg_bench::{convnet_pair, random_batch, random_matrix};
use increg_core::tensor::gemm;

fn bench_gemm(c: &mut Criterion) {
    let mut g = c.benchmark_group("gemm");
    // Shapes of the ConvNet layers at batch 1: filters x patch times patch x spatial.
    for &(m, k, n) in &[(32usize, 48usize, 961usize), (32, 800, 225), (64, 800, 49), (64, 400, 49)] {
        let (a, b) = (random_matrix(m, k, 1), random_matrix(k, n, 2));
        g.throughput(Throughput::Elements((2 * m * k * n) as u64));
        g.bench_with_input(BenchmarkId::from_parameter(format!("{m}x{k}x{n}")), &(a, b), |bch, (a, b)| {
            bch.iter(|| gemm(black_box(a), black_box(b)).unwrap())
        });
    }
    g.finish();
}

fn bench_forward(c: &mut Criterion) {
    let mut g = c.benchmark_group("convnet_forward");
    g.sample_size(20);
    for &frac in &[0.0, 0.25, 0.5, 0.75] {
        let (base, small) = convnet_pair(frac, 0).unwrap();
        let x = random_batch(&base, 10, 7);
        if frac == 0.0 {
            g.bench_function("dense", |b| b.iter(|| base.predict(black_box(&x)).unwrap()));
        }
        g.bench_with_input(BenchmarkId::new("compact", frac), &x, |b, x| {
            b.iter(|| small.predict(black_box(x)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench_gemm, bench_forward);
criterion_main!(benches);
