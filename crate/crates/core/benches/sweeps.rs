use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use sse_core::dynamics::{ratio_sweep, EnsembleSpec};
use sse_core::spectral::diagonalize_with;
use sse_core::{build_matrix, Eigensolver, Execution, SystemParams};

fn params(n: usize) -> SystemParams {
    let p = SystemParams::from_band(n, 1.0, 0.01, 0.0, 0.0).unwrap();
    p.with_omega(p.omega_sse())
}

fn sweep(c: &mut Criterion) {
    let p = params(200);
    let s = p.omega_sse();
    let grid: Vec<f64> = (1..=8).map(|i| 0.25 * i as f64 * s).collect();
    let spec = EnsembleSpec::Random { n_states: 32, seed: 1 };
    let mut g = c.benchmark_group("ratio_sweep");
    g.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        g.bench_function(BenchmarkId::from_parameter(format!("{exec:?}")), |b| {
            b.iter(|| ratio_sweep(black_box(&p), &grid, 5.0, &spec, exec).unwrap())
        });
    }
    g.finish();
}

fn eigensolvers(c: &mut Criterion) {
    let mut g = c.benchmark_group("diagonalize");
    g.sample_size(10);
    for n in [100, 400] {
        let h = build_matrix(&params(n)).unwrap();
        for solver in [Eigensolver::Arrowhead, Eigensolver::Dense] {
            g.bench_with_input(BenchmarkId::new(format!("{solver:?}"), n), &h, |b, h| {
                b.iter(|| diagonalize_with(black_box(h), solver).unwrap())
            });
        }
    }
    g.finish();
}

criterion_group!(benches, sweep, eigensolvers);
criterion_main!(benches);
