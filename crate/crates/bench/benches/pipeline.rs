//! Dyadic estimation pipeline benchmarks: discretization, graph
//! predecessor sets, and the quadrature energy.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use treecap::spaces::{
    continuous_energy, discretize_set, graph_predecessor_set, make_space, pt1, weight_pi_s,
    SetDescriptor, SpaceConfig, SpaceKind, SpaceMeasure,
};
use treecap::capacity;

fn bench_discretize_and_capacity(c: &mut Criterion) {
    let space = make_space(SpaceConfig {
        kind: SpaceKind::Interval,
        depth: 12,
        delta: None,
    })
    .unwrap();
    let sd = SetDescriptor::parse("ifs 1/3 0 1/3 2/3", 1).unwrap();
    let tree = weight_pi_s(&space, 0.5, 2.0).unwrap();
    c.bench_function("discretize-cantor-ifs-depth-12", |b| {
        b.iter(|| discretize_set(black_box(&space), black_box(&sd), 12).unwrap())
    });
    let set = discretize_set(&space, &sd, 12).unwrap();
    c.bench_function("capacity-of-discretized-cantor", |b| {
        b.iter(|| capacity(black_box(&tree), black_box(&set), 2.0).unwrap())
    });
}

fn bench_predecessor_sets(c: &mut Criterion) {
    let space = make_space(SpaceConfig {
        kind: SpaceKind::Interval,
        depth: 12,
        delta: None,
    })
    .unwrap();
    c.bench_function("graph-predecessor-set-depth-12", |b| {
        b.iter(|| graph_predecessor_set(black_box(&space), pt1(0.37), 12).unwrap())
    });
}

fn bench_quadrature_energy(c: &mut Criterion) {
    let space = make_space(SpaceConfig {
        kind: SpaceKind::Interval,
        depth: 8,
        delta: None,
    })
    .unwrap();
    let leb = SpaceMeasure::UniformDensity { total: 1.0 };
    c.bench_function("continuous-energy-level-9", |b| {
        b.iter(|| continuous_energy(black_box(&space), black_box(&leb), 0.5, 2.0, 9).unwrap())
    });
}

criterion_group!(
    benches,
    bench_discretize_and_capacity,
    bench_predecessor_sets,
    bench_quadrature_energy
);
criterion_main!(benches);
