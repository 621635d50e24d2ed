use std::hint::black_box;

use arthur_bench::{desk_params, random_gates};
use arthur_core::magic_test::{derive_params, run_test, threshold_f, MerlinState, Mode};
use arthur_core::{rng_from_seed, StateVector, Tableau};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

fn tableau_gates(c: &mut Criterion) {
    let mut group = c.benchmark_group("tableau_gates");
    for n in [64, 1024] {
        let gates = random_gates(n, 4096, 1);
        let mut t = Tableau::new(n);
        group.throughput(Throughput::Elements(gates.len() as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &gates, |b, gates| {
            b.iter(|| {
                for g in gates {
                    t.apply_gate(black_box(g)).unwrap();
                }
            })
        });
    }
    group.finish();
}

fn tableau_measure(c: &mut Criterion) {
    let mut group = c.benchmark_group("tableau_measure");
    for n in [64, 1024] {
        let mut t = Tableau::new(n);
        for g in random_gates(n, 8 * n, 2) {
            t.apply_gate(&g).unwrap();
        }
        let mut rng = rng_from_seed(3);
        group.bench_function(BenchmarkId::from_parameter(n), |b| {
            let mut q = 0;
            b.iter(|| {
                // H before each measurement keeps outcomes random.
                t.h(q).unwrap();
                black_box(t.measure_z(q, &mut rng).unwrap());
                q = (q + 1) % n;
            })
        });
    }
    group.finish();
}

fn magic_test(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_test");
    let honest = MerlinState::honest(StateVector::zero(0).unwrap());
    for r in [1_000u64, 13_703] {
        let tp = desk_params(1, r, 100);
        let mut rng = rng_from_seed(4);
        group.bench_function(BenchmarkId::new("honest", r), |b| b.iter(|| run_test(&honest, &tp, &mut rng).unwrap()));
    }
    let tp = desk_params(8, 2_000, 50);
    let ghz = MerlinState::ghz((0..8).collect(), StateVector::zero(0).unwrap()).unwrap();
    let mut rng = rng_from_seed(5);
    group.bench_function("ghz8", |b| b.iter(|| run_test(&ghz, &tp, &mut rng).unwrap()));
    group.finish();
}

fn threshold(c: &mut Criterion) {
    let mut group = c.benchmark_group("threshold");
    for r in [10_000u64, 1_000_000, 100_000_000] {
        group.bench_function(BenchmarkId::from_parameter(r), |b| {
            b.iter(|| threshold_f(black_box(0.05), 0.0, black_box(r)).unwrap())
        });
    }
    group.bench_function("paper_strict_s100", |b| {
        b.iter(|| derive_params(black_box(100), 0, 1.0 / 4000.0, 0.1, Mode::PaperStrict).unwrap())
    });
    group.finish();
}

criterion_group!(benches, tableau_gates, tableau_measure, magic_test, threshold);
criterion_main!(benches);
