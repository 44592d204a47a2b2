use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kik_bench::ising_schedule;
use kik_core::coefficients::{adaptive_coefficients, adaptive_coefficients_ls};
use kik_core::dynamics::{magnus1, propagate};
use kik_core::engine::mitigate_exact;
use kik_core::liouville::{pauli, HilbertOp, VecObservable};
use kik_core::scenarios::models::ground_state;
use kik_core::GChoice;

fn propagation(c: &mut Criterion) {
    let mut group = c.benchmark_group("propagate");
    for n in [2, 3, 4] {
        let s = ising_schedule(n, 4);
        group.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| {
            b.iter(|| propagate(black_box(s)).unwrap())
        });
    }
    group.finish();
}

fn first_magnus(c: &mut Criterion) {
    let s = ising_schedule(3, 4);
    c.bench_function("magnus1/3q", |b| b.iter(|| magnus1(black_box(&s)).unwrap()));
}

fn coefficients(c: &mut Criterion) {
    c.bench_function("adaptive/M3", |b| {
        b.iter(|| adaptive_coefficients(3, black_box(0.7)).unwrap())
    });
    c.bench_function("adaptive_ls/M8", |b| {
        b.iter(|| adaptive_coefficients_ls(8, black_box(0.7)).unwrap())
    });
}

fn mitigation(c: &mut Criterion) {
    let n = 3;
    let s = ising_schedule(n, 4);
    let a = VecObservable::new(&HilbertOp::on_qubit(&pauli('Z').unwrap(), 0, n)).unwrap();
    let rho = ground_state(n);
    c.bench_function("mitigate_exact/3q/M3", |b| {
        b.iter(|| mitigate_exact(&s, &a, &rho, 3, GChoice::MuPow(2.0)).unwrap())
    });
}

criterion_group!(benches, propagation, first_magnus, coefficients, mitigation);
criterion_main!(benches);
