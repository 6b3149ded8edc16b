//! Per-step cost of SOFIM against the first-order baselines. SOFIM should
//! track SGD with momentum within a small constant factor at every size.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use sofim::baselines::{AdamConfig, AdamState, LrSchedule, SgdConfig, SgdMomentumState};
use sofim::{sofim_direction, SofimConfig, SofimState};

const DIMS: [usize; 4] = [1_000, 10_000, 100_000, 1_000_000];

fn gradient(dim: usize) -> Vec<f64> {
    (0..dim).map(|i| ((i as f64) * 0.618).sin()).collect()
}

fn update_cost(c: &mut Criterion) {
    let mut group = c.benchmark_group("update");
    for dim in DIMS {
        let g = gradient(dim);
        group.throughput(Throughput::Elements(dim as u64));

        group.bench_with_input(BenchmarkId::new("sofim", dim), &dim, |b, &dim| {
            let mut state = SofimState::new(dim, SofimConfig::default()).unwrap();
            let mut w = vec![0.0; dim];
            b.iter(|| {
                state
                    .step_in_place(black_box(&mut w), black_box(&g))
                    .unwrap()
            });
        });

        group.bench_with_input(BenchmarkId::new("sgd_momentum", dim), &dim, |b, &dim| {
            let cfg = SgdConfig {
                eta: 0.01,
                momentum: 0.9,
                weight_decay: 1e-6,
                schedule: LrSchedule::Constant,
            };
            let mut state = SgdMomentumState::new(dim, cfg).unwrap();
            let mut w = vec![0.0; dim];
            b.iter(|| {
                state
                    .step_in_place(black_box(&mut w), black_box(&g))
                    .unwrap()
            });
        });

        group.bench_with_input(BenchmarkId::new("adam", dim), &dim, |b, &dim| {
            let mut state = AdamState::new(dim, AdamConfig::default()).unwrap();
            let mut w = vec![0.0; dim];
            b.iter(|| {
                state
                    .step_in_place(black_box(&mut w), black_box(&g))
                    .unwrap()
            });
        });
    }
    group.finish();
}

fn direction(c: &mut Criterion) {
    let mut group = c.benchmark_group("direction");
    for dim in DIMS {
        let m_hat = gradient(dim);
        group.throughput(Throughput::Elements(dim as u64));
        group.bench_with_input(BenchmarkId::from_parameter(dim), &m_hat, |b, m| {
            b.iter(|| sofim_direction(black_box(m), 0.5).unwrap());
        });
    }
    group.finish();
}

criterion_group!(benches, update_cost, direction);
criterion_main!(benches);
