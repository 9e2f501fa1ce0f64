use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nlsgraph::reductions::{bridge_reduce, comparison_transform, unfold, EdgeFunction};
use nlsgraph::{energy, energy_gradient, minimize, FlowConfig};
use nlsgraph_bench::{bridge_field, odd_bridge_field, P};

fn functionals(c: &mut Criterion) {
    let mut group = c.benchmark_group("functionals");
    for h in [0.1, 0.05, 0.025] {
        let u = bridge_field(h, 80.0);
        group.bench_with_input(BenchmarkId::new("energy", h), &u, |b, u| {
            b.iter(|| energy(black_box(u), P).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("gradient", h), &u, |b, u| {
            b.iter(|| energy_gradient(black_box(u), P))
        });
    }
    group.finish();
}

fn reductions(c: &mut Criterion) {
    let even = bridge_field(0.05, 80.0);
    let odd = odd_bridge_field(0.05, 80.0);
    let u1 = EdgeFunction::uniform(1.0, (0..=200).map(|k| (k as f64 * 0.03).sin()).collect()).unwrap();
    let u2 = EdgeFunction::uniform(2.0, (0..=400).map(|k| (k as f64 * 0.01).cos()).collect()).unwrap();
    c.bench_function("comparison_transform", |b| {
        b.iter(|| comparison_transform(black_box(&u1), black_box(&u2), P).unwrap())
    });
    c.bench_function("bridge_reduce", |b| b.iter(|| bridge_reduce(black_box(&even), P).unwrap()));
    c.bench_function("unfold", |b| b.iter(|| unfold(black_box(&odd)).unwrap()));
}

fn flow(c: &mut Criterion) {
    let u = bridge_field(0.1, 20.0);
    let cfg = FlowConfig {
        max_iters: 1000,
        ..FlowConfig::for_spacing(0.1)
    };
    let mut group = c.benchmark_group("flow");
    group.sample_size(10);
    group.bench_function("minimize_1000", |b| {
        b.iter(|| minimize(black_box(&u), P, 1.0, &cfg).unwrap())
    });
    group.finish();
}

criterion_group!(benches, functionals, reductions, flow);
criterion_main!(benches);
