use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use landau_bench::mixture_field;
use landau_core::coefficients::CoefficientEngine;
use landau_core::functionals::{dissipation_single, fisher, DEFAULT_F_TOL};
use landau_core::solver::{advance_with_dt, rhs, StepperConfig};
use landau_core::{direct_coefficients, SolverState};
use std::hint::black_box;

fn coefficients(c: &mut Criterion) {
    let mut group = c.benchmark_group("coefficients");
    group.sample_size(10);
    for cells in [16, 32] {
        let f = mixture_field(cells);
        let engine = CoefficientEngine::new(f.grid(), 2).unwrap();
        group.bench_with_input(BenchmarkId::new("fft", cells), &f, |b, f| b.iter(|| engine.compute(black_box(f)).unwrap()));
        group.bench_with_input(BenchmarkId::new("flux", cells), &f, |b, f| {
            b.iter(|| engine.flux_coefficients(black_box(f), DEFAULT_F_TOL).unwrap())
        });
    }
    let f = mixture_field(8);
    let engine = CoefficientEngine::new(f.grid(), 2).unwrap();
    group.bench_function("direct/8", |b| b.iter(|| direct_coefficients(black_box(&f), engine.kernels()).unwrap()));
    group.finish();
}

fn stepping(c: &mut Criterion) {
    let mut group = c.benchmark_group("stepping");
    group.sample_size(10);
    let f = mixture_field(32);
    let engine = CoefficientEngine::new(f.grid(), 2).unwrap();
    let flux = engine.flux_coefficients(&f, DEFAULT_F_TOL).unwrap();
    group.bench_function("rhs/32", |b| b.iter(|| rhs(black_box(&f), &flux, 2).unwrap()));
    group.bench_function("dissipation/32", |b| b.iter(|| dissipation_single(black_box(&f), &flux)));
    group.bench_function("fisher/32", |b| b.iter(|| fisher(black_box(&f), DEFAULT_F_TOL)));
    let cfg = StepperConfig::default();
    group.bench_function("rk2_step/32", |b| {
        b.iter(|| advance_with_dt(SolverState::new(f.clone(), 0.0), &cfg, &engine, 1e-3).unwrap())
    });
    group.finish();
}

criterion_group!(benches, coefficients, stepping);
criterion_main!(benches);
