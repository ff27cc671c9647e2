//! Capacity engine benchmarks: the exact recursion, the equilibrium
//! reconstruction, the optimization oracles, and the testing norm.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use treecap::instances::{random_antichain, random_tree, TreeFamily};
use treecap::rng::SplitMix64;
use treecap::tree::{BoundarySet, TreeSpec, WeightRule, WeightedTree};
use treecap::{
    capacity, capacity_dual_oracle, capacity_primal_oracle, carleson_norm, equilibrium,
    OracleOptions,
};

fn binary(height: u32) -> WeightedTree {
    WeightedTree::build(TreeSpec::Homogeneous {
        branching: 2,
        height,
        weight: WeightRule::Constant(1.0),
        delta: None,
    })
    .unwrap()
}

fn bench_recursion(c: &mut Criterion) {
    let mut group = c.benchmark_group("capacity-recursion");
    for h in [10u32, 14] {
        let tree = binary(h);
        let e = BoundarySet::from_antichain(&tree, &tree.leaves()).unwrap();
        group.bench_with_input(BenchmarkId::new("full-boundary", h), &h, |b, _| {
            b.iter(|| capacity(black_box(&tree), black_box(&e), 2.0).unwrap())
        });
    }
    group.finish();
}

fn bench_equilibrium(c: &mut Criterion) {
    let tree = binary(12);
    let e = BoundarySet::from_antichain(&tree, &tree.leaves()).unwrap();
    c.bench_function("equilibrium-binary-12", |b| {
        b.iter(|| equilibrium(black_box(&tree), black_box(&e), 2.0).unwrap())
    });
}

fn bench_oracles(c: &mut Criterion) {
    let mut rng = SplitMix64::new(7);
    let tree = random_tree(&mut rng, &TreeFamily::default());
    let e = random_antichain(&mut rng, &tree, 0.3);
    let opts = OracleOptions {
        tol: 1e-6,
        max_iters: 200_000,
    };
    c.bench_function("primal-oracle-random-121", |b| {
        b.iter(|| capacity_primal_oracle(black_box(&tree), black_box(&e), 2.0, opts).unwrap())
    });
    c.bench_function("dual-oracle-random-121", |b| {
        b.iter(|| capacity_dual_oracle(black_box(&tree), black_box(&e), 2.0, opts).unwrap())
    });
}

fn bench_carleson_norm(c: &mut Criterion) {
    let tree = binary(12);
    let e = BoundarySet::from_antichain(&tree, &tree.leaves()).unwrap();
    let mu = equilibrium(&tree, &e, 2.0).unwrap().mu;
    c.bench_function("carleson-norm-binary-12", |b| {
        b.iter(|| carleson_norm(black_box(&tree), black_box(&mu), 2.0).unwrap())
    });
}

criterion_group!(
    benches,
    bench_recursion,
    bench_equilibrium,
    bench_oracles,
    bench_carleson_norm
);
criterion_main!(benches);
