//! Benchmarks: adaptive search vs brute force on a low-rank instance,
//! and the raw heap update/restore cycle.

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use std::hint::black_box;

use adaptive_knn::datagen::{generate_subspace, SubspaceSpec};
use adaptive_knn::estimate::{ArmState, ConfidenceSpec, ConfidenceVariant};
use adaptive_knn::heaps::HeapBank;
use adaptive_knn::{brute_force, run, RunConfig, SamplingMode};

fn adaptive_vs_brute(c: &mut Criterion) {
    let mut group = c.benchmark_group("search");
    for &(n, m, p) in &[(200usize, 2048usize, 5usize), (500, 4096, 10)] {
        let (data, query) = generate_subspace(&SubspaceSpec { n, m, p, seed: 42 }).unwrap();
        let confidence =
            ConfidenceSpec::new(ConfidenceVariant::Experimental, 0.001, n, 0.5).unwrap();
        let cfg = RunConfig {
            k: 10,
            h: 10,
            delta: 0.001,
            confidence,
            sampling_mode: SamplingMode::WithReplacement,
            seed: 7,
            max_iterations: None,
        };
        let label = format!("n{n}_m{m}_p{p}");
        group.bench_function(BenchmarkId::new("adaptive", &label), |b| {
            b.iter(|| run(black_box(&data), black_box(&query), black_box(&cfg)).unwrap())
        });
        group.bench_function(BenchmarkId::new("brute_force", &label), |b| {
            b.iter(|| brute_force(black_box(&data), black_box(&query), 10).unwrap())
        });
    }
    group.finish();
}

fn heap_cycle(c: &mut Criterion) {
    let mut group = c.benchmark_group("heap_update_restore");
    for &n in &[100usize, 1_000, 10_000] {
        let confidence =
            ConfidenceSpec::new(ConfidenceVariant::Experimental, 0.01, n, 1.0).unwrap();
        let arms: Vec<ArmState> = (0..n)
            .map(|i| ArmState::first_sample((i as f64 + 0.5) / (2 * n) as f64, &confidence))
            .collect();
        let bank = HeapBank::build(&arms, 10, 10).unwrap();
        group.bench_function(BenchmarkId::from_parameter(n), |b| {
            let mut state = 0x9e3779b97f4a7c15u64;
            b.iter_batched(
                || bank.clone(),
                |mut bank| {
                    for _ in 0..64 {
                        state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                        let idx = (state >> 33) as usize % n;
                        let mut arm = arms[idx].clone();
                        arm.update((state >> 11) as f64 / (1u64 << 53) as f64, &confidence)
                            .unwrap();
                        bank.update_arm(idx, &arm).unwrap();
                        black_box(bank.restore_ordering());
                    }
                    bank
                },
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, adaptive_vs_brute, heap_cycle);
criterion_main!(benches);
