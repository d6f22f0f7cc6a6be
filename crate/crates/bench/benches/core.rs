use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use plateau_bench::{octant, torus};
use plateau_core::cycles::simplex_volume;
use plateau_core::minimizer::mass_gradient;
use plateau_core::{kazhdan_exact, MarkedGroup};

fn simplex(c: &mut Criterion) {
    let verts = octant();
    let mut group = c.benchmark_group("simplex_volume");
    for q in [4, 8, 16] {
        group.bench_with_input(BenchmarkId::from_parameter(q), &q, |b, &q| {
            b.iter(|| simplex_volume(black_box(&verts), q).unwrap())
        });
    }
    group.finish();
}

fn mass(c: &mut Criterion) {
    let mut group = c.benchmark_group("torus");
    for side in [4, 8] {
        let cycle = torus(side);
        group.bench_with_input(BenchmarkId::new("mass", side), &cycle, |b, cy| b.iter(|| cy.mass(8).unwrap()));
        group.bench_with_input(BenchmarkId::new("gradient", side), &cycle, |b, cy| {
            b.iter(|| mass_gradient(cy, 8).unwrap())
        });
    }
    group.finish();
}

fn spectral(c: &mut Criterion) {
    let mut group = c.benchmark_group("kazhdan_exact");
    group.sample_size(10);
    for n in [8, 32] {
        let g = MarkedGroup::cyclic(n).unwrap();
        let s = [g.letter(1)];
        group.bench_with_input(BenchmarkId::new("cyclic", n), &g, |b, g| b.iter(|| kazhdan_exact(g, &s).unwrap()));
    }
    let d = MarkedGroup::dihedral(4).unwrap();
    let s = [d.letter(1), d.letter(2)];
    group.bench_function("dihedral 4", |b| b.iter(|| kazhdan_exact(&d, &s).unwrap()));
    group.finish();
}

fn balls(c: &mut Criterion) {
    let g = MarkedGroup::free(2).unwrap();
    c.bench_function("free2_ball_6", |b| b.iter(|| g.ball(black_box(6)).unwrap()));
}

criterion_group!(benches, simplex, mass, spectral, balls);
criterion_main!(benches);
