use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use polyflow::convection::{c_h, d_h};
use polyflow::operators::{build_all_local_operators, norm_ah};
use polyflow::verify::samples;
use polyflow::Mesh;

fn bench_local_operators(c: &mut Criterion) {
    let mesh = Mesh::bundled_hexagonal(1).unwrap();
    c.bench_function("local operator blocks (hex level 1)", |b| {
        b.iter(|| build_all_local_operators(&mesh));
    });
}

fn bench_forms(c: &mut Criterion) {
    let mesh = Mesh::build_triangular(16);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let w = samples::divergence_free(&mesh, &mut rng);
    let v = samples::random_hybrid(&mesh, &mut rng);
    let z = samples::random_hybrid(&mesh, &mut rng);
    let rho = samples::random_cellfield(&mesh, &mut rng, 0.5, 3.0);
    let chi = samples::random_cellfield(&mesh, &mut rng, -1.0, 1.0);
    c.bench_function("norm_ah (tri n=16)", |b| b.iter(|| norm_ah(&mesh, &v)));
    c.bench_function("c_h (tri n=16)", |b| b.iter(|| c_h(&mesh, &rho, &w, &v, &z)));
    c.bench_function("d_h (tri n=16)", |b| b.iter(|| d_h(&mesh, &w, &rho, &chi)));
}

criterion_group!(benches, bench_local_operators, bench_forms);
criterion_main!(benches);
