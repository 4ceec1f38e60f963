//! Criterion benchmarks for the hot kernels: the exponential bound
//! search, the max-flow solver, finite-field rank, and one full coding
//! round in each discipline.

use brcap_bench::{adversarial_instance, desk_params};
use brcap_core::{bound_b, CodeState, Field, FieldMatrix, FlowGraph};
use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::collections::BTreeSet;
use std::hint::black_box;

fn bench_bound_search(c: &mut Criterion) {
    let p = desk_params();
    c.bench_function("bound_b full search (n=8,k=3,r=2)", |b| {
        b.iter(|| bound_b(black_box(&p)).unwrap().value)
    });
}

fn bench_max_flow(c: &mut Criterion) {
    let instance = adversarial_instance();
    let g = FlowGraph::build(&instance).unwrap();
    let (g, dc) = g
        .with_collector(&instance, 2, &BTreeSet::from([5, 6]))
        .unwrap();
    c.bench_function("max_flow adversarial collector", |b| {
        b.iter(|| g.max_flow(black_box(g.source()), black_box(dc)).unwrap())
    });
}

fn bench_rank(c: &mut Criterion) {
    let field = Field::binary_ext(8).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let rows: Vec<Vec<u32>> = (0..40)
        .map(|_| (0..40).map(|_| (rng.next_u64() % 256) as u32).collect())
        .collect();
    let matrix = FieldMatrix::from_rows(field, rows).unwrap();
    c.bench_function("rank 40x40 GF(2^8)", |b| {
        b.iter(|| black_box(&matrix).rank())
    });
}

fn bench_rlnc_round(c: &mut Criterion) {
    let instance = adversarial_instance();
    let field = Field::binary_ext(8).unwrap();
    c.bench_function("rlnc_round GF(2^8)", |b| {
        b.iter(|| {
            let mut state = CodeState::init_source(&instance, field, 3).unwrap();
            let mut rng = ChaCha20Rng::seed_from_u64(0);
            state.rlnc_round(&mut rng).unwrap();
            black_box(state.history().len())
        })
    });
}

fn bench_generic_round(c: &mut Criterion) {
    let instance = adversarial_instance();
    let field = Field::prime(47).unwrap();
    c.bench_function("generic_round q=47", |b| {
        b.iter(|| {
            let mut state = CodeState::init_source(&instance, field, 3).unwrap();
            let mut rng = ChaCha20Rng::seed_from_u64(0);
            state.generic_round(1 << 20, &mut rng).unwrap();
            black_box(state.history().len())
        })
    });
}

fn bench_capacity_grid(c: &mut Criterion) {
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    c.bench_function("bound_b random grid point", |b| {
        b.iter(|| {
            let mut p = desk_params();
            p.alpha = rng.gen_range(0..=3);
            p.beta = rng.gen_range(0..=3);
            bound_b(black_box(&p)).unwrap().value
        })
    });
}

criterion_group!(
    kernels,
    bench_bound_search,
    bench_max_flow,
    bench_rank,
    bench_rlnc_round,
    bench_generic_round,
    bench_capacity_grid,
);
criterion_main!(kernels);
