//! Sequential against rayon-parallel evaluation of the same workloads.
//!
//! The parallel rows only appear when the `parallel` feature is on.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use quapprox::circuit::TrainableCircuit;
use quapprox::circuit::EvalMode;
use quapprox::fourier::gaussian_model;
use quapprox::par;
use quapprox::sampling::{build_plan, sample_theta};
use std::hint::black_box;

fn circuit_batch(c: &mut Criterion) {
    let model = gaussian_model(1).unwrap();
    let plan = build_plan(&model).unwrap();
    let r = plan.weight_scale();
    let xs: Vec<f64> = (0..512).map(|i| -1.0 + 2.0 * i as f64 / 511.0).collect();
    let mut group = c.benchmark_group("trainable-eval-512-points");
    for n in [16usize, 256] {
        let circuit = TrainableCircuit::new(sample_theta(&plan, n, r, 1).unwrap());
        let eval = |k: usize| circuit.evaluate(&[xs[k]], r, EvalMode::Exact).unwrap();
        group.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, _| {
            b.iter(|| black_box(par::map_range_sequential(xs.len(), eval)))
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("parallel", n), &n, |b, _| {
            b.iter(|| black_box(par::map_range_parallel(xs.len(), eval)))
        });
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = circuit_batch
}
criterion_main!(benches);
