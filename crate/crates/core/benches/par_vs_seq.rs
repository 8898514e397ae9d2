//! Parallel vs sequential paths for the data-parallel hot spots: curvature
//! evaluation and Jacobian assembly on a large grid torus, and subset
//! enumeration for the existence checker. Build with the default `parallel`
//! feature; the unsuffixed entry points then run on rayon while the `_seq`
//! twins stay single-threaded.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use curvflow::meshes;
use curvflow::packing2d::{
    curvature_jacobian_u, curvature_jacobian_u_seq, gauss_curvature, gauss_curvature_seq,
    random_metric,
};
use curvflow::thurston::{thurston_condition, thurston_condition_seq, CheckOptions};

fn bench_curvature(c: &mut Criterion) {
    let surface = meshes::triangulated_torus(40, 40).build_surface().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let metric = random_metric(surface.vertex_count(), &mut rng, 0.5, 2.0);

    let mut group = c.benchmark_group("gauss_curvature_40x40_torus");
    group.bench_function("seq", |b| {
        b.iter(|| gauss_curvature_seq(black_box(&surface), black_box(&metric)).unwrap())
    });
    group.bench_function("par", |b| {
        b.iter(|| gauss_curvature(black_box(&surface), black_box(&metric)).unwrap())
    });
    group.finish();
}

fn bench_jacobian(c: &mut Criterion) {
    let surface = meshes::triangulated_torus(20, 20).build_surface().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let metric = random_metric(surface.vertex_count(), &mut rng, 0.5, 2.0);

    let mut group = c.benchmark_group("curvature_jacobian_20x20_torus");
    group.bench_function("seq", |b| {
        b.iter(|| curvature_jacobian_u_seq(black_box(&surface), black_box(&metric)).unwrap())
    });
    group.bench_function("par", |b| {
        b.iter(|| curvature_jacobian_u(black_box(&surface), black_box(&metric)).unwrap())
    });
    group.finish();
}

fn bench_subset_enumeration(c: &mut Criterion) {
    let surface = meshes::triangulated_torus(4, 4).build_surface().unwrap();
    let opts = CheckOptions::default();

    let mut group = c.benchmark_group("thurston_condition_16_vertices");
    group.sample_size(20);
    group.bench_function("seq", |b| {
        b.iter(|| thurston_condition_seq(black_box(&surface), black_box(&opts)).unwrap())
    });
    group.bench_function("par", |b| {
        b.iter(|| thurston_condition(black_box(&surface), black_box(&opts)).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_curvature,
    bench_jacobian,
    bench_subset_enumeration
);
criterion_main!(benches);
