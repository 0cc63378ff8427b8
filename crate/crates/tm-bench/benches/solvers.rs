//! Criterion benchmarks for the hot paths: adaptive quadrature, the
//! soliton basis, Bessel-potential evaluation, the mu root solve, one
//! concentrating shoot, and a classifier pass.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use tm_core::sobolev::{bessel_g, solve_mu};
use tm_core::soliton::{eval_basis, SolitonFrame};
use tm_core::special::integrate;
use tm_core::threshold::{classify, ClassifyParams, GridSpec, Nonlinearity};
use tm_core::variational::{shoot, SolverConfig};
use tm_core::Geometry;

fn bench_quadrature(c: &mut Criterion) {
    c.bench_function("integrate sech^2 tail", |b| {
        b.iter(|| {
            integrate(
                |t| 1.0 / (black_box(t) - 40.0).cosh().powi(2),
                0.0,
                f64::INFINITY,
                1e-12,
            )
            .unwrap()
            .value
        })
    });
}

fn bench_soliton_basis(c: &mut Criterion) {
    let frame = SolitonFrame::from_height(10.0, Geometry::PlaneCritical).unwrap();
    c.bench_function("eval_basis across the transition", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for i in 0..100 {
                let t = frame.t_a - 10.0 + 0.2 * i as f64;
                acc += eval_basis(&frame, black_box(t)).w1;
            }
            acc
        })
    });
}

fn bench_bessel(c: &mut Criterion) {
    c.bench_function("bessel_g at r = 0.01", |b| {
        b.iter(|| bessel_g(black_box(0.01)).unwrap().g)
    });
}

fn bench_solve_mu(c: &mut Criterion) {
    c.bench_function("solve_mu at j = 20", |b| {
        b.iter(|| solve_mu(black_box(20.0), 1e-12).unwrap().mu)
    });
}

fn bench_shoot(c: &mut Criterion) {
    let cfg = SolverConfig::default();
    let mut group = c.benchmark_group("shoot");
    group.sample_size(10);
    group.bench_function("plane H = 8", |b| {
        b.iter(|| shoot(Geometry::PlaneCritical, black_box(8.0), &cfg).unwrap().s0)
    });
    group.finish();
}

fn bench_classify(c: &mut Criterion) {
    let g = Nonlinearity::parse("cutoff(30, exp(s)) * (1 - cE/s^2 + 1/s) / s").unwrap();
    let params = ClassifyParams {
        p: 1.0,
        q: 2.0,
        a: 1.0,
        b: 0.0,
        l: 30.0,
        c_star: None,
        l_large_asserted: false,
    };
    let grid = GridSpec {
        s_min: 1.0,
        s_max: 9000.0,
        n: 1000,
    };
    c.bench_function("classify existence witness", |b| {
        b.iter(|| {
            classify(&g, Geometry::PlaneCritical, &params, &grid)
                .unwrap()
                .outcome
        })
    });
}

criterion_group!(
    benches,
    bench_quadrature,
    bench_soliton_basis,
    bench_bessel,
    bench_solve_mu,
    bench_shoot,
    bench_classify
);
criterion_main!(benches);
