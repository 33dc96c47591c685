use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ptrot_bench::{ising_block, plan, spin_model};
use ptrot_core::models::{Model, Topology};
use ptrot_core::numerics::DENSE_LIMIT;
use ptrot_core::partition::greedy_partition;
use ptrot_core::schedule::{build_conflict_graph, estimate_error, plan_unitary, BoundMode};
use ptrot_core::synth::fit::{gauss_newton_fit, Ansatz, FitOptions};
use ptrot_core::synth::{circuit_to_matrix, simplify, synthesize, SynthConfig};

fn front_end(c: &mut Criterion) {
    let h = spin_model(Model::Heisenberg, 5, 2, Topology::Triangular);
    c.bench_function("partition heisenberg 5x2 tri", |b| b.iter(|| greedy_partition(black_box(&h), 3).unwrap()));
    let parts = greedy_partition(&h, 3).unwrap();
    c.bench_function("conflict graph heisenberg 5x2 tri", |b| {
        b.iter(|| build_conflict_graph(black_box(&parts), &h).unwrap())
    });
    c.bench_function("dense bound heisenberg 5x2 tri", |b| {
        b.iter(|| estimate_error(&h, black_box(&parts), 1.0, 10, BoundMode::Dense).unwrap())
    });
}

fn unitaries(c: &mut Criterion) {
    let h = spin_model(Model::Ising, 4, 2, Topology::Square);
    let (parts, p) = plan(&h, 3, 4);
    c.bench_function("plan unitary ising 4x2 n=4", |b| {
        b.iter(|| plan_unitary(black_box(&p), &h, &parts, DENSE_LIMIT).unwrap())
    });
}

fn fitting(c: &mut Criterion) {
    let target = ising_block(0.1);
    let ansatz = Ansatz::new(3, &[(0, 1), (1, 2), (0, 1), (1, 2)]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let init: Vec<f64> = (0..ansatz.num_params()).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    let opts = FitOptions::default();
    c.bench_function("gauss-newton 3q 4cx", |b| {
        b.iter(|| gauss_newton_fit(&ansatz, black_box(&target), &init, &opts).unwrap())
    });
    let mut group = c.benchmark_group("synthesis");
    group.sample_size(10);
    group.bench_function("mcts ising block", |b| {
        b.iter(|| synthesize(black_box(&target), &SynthConfig::default()).unwrap())
    });
    let r = synthesize(&target, &SynthConfig::default()).unwrap();
    group.bench_function("simplify + matrix", |b| {
        b.iter(|| circuit_to_matrix(&simplify(black_box(&r.circuit)), usize::MAX).unwrap())
    });
    group.finish();
}

criterion_group!(benches, front_end, unitaries, fitting);
criterion_main!(benches);
