//! Compares the feature-selected (rayon when `parallel` is on) paths of
//! the two data-parallel hot spots against their sequential references.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use cechsim::cech::{build_cech_centralized, build_cech_centralized_seq, random_cells};
use cechsim::geometry::Tolerance;
use cechsim::oracle::{coverage_rows_seq, disks_of, CoverageGrid};

fn bench_cech_build(c: &mut Criterion) {
    let cells = random_cells(17, 60, [0.0, 0.0, 8.0, 8.0], [0.6, 1.4]);
    let tol = Tolerance::new(1e-9);
    let mut group = c.benchmark_group("cech_build_60_cells");
    group.bench_function("selected", |b| {
        b.iter(|| build_cech_centralized(black_box(&cells), 3, tol))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| build_cech_centralized_seq(black_box(&cells), 3, tol))
    });
    group.finish();
}

fn bench_grid_fill(c: &mut Criterion) {
    let cells = random_cells(23, 40, [0.0, 0.0, 10.0, 10.0], [0.5, 1.2]);
    let disks = disks_of(&cells);
    let res = 0.01;
    let mut group = c.benchmark_group("coverage_grid_fill");
    group.sample_size(20);
    group.bench_function("selected", |b| {
        b.iter(|| CoverageGrid::new(black_box(&disks), res))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            let pad = disks.iter().map(|d| d.radius).fold(0.0, f64::max);
            let x0 = disks.iter().map(|d| d.center.x - d.radius).fold(0.0_f64, f64::min) - pad;
            let x1 = disks.iter().map(|d| d.center.x + d.radius).fold(0.0_f64, f64::max) + pad;
            let y0 = disks.iter().map(|d| d.center.y - d.radius).fold(0.0_f64, f64::min) - pad;
            let y1 = disks.iter().map(|d| d.center.y + d.radius).fold(0.0_f64, f64::max) + pad;
            let nx = ((x1 - x0) / res).ceil() as usize + 1;
            let ny = ((y1 - y0) / res).ceil() as usize + 1;
            coverage_rows_seq(black_box(&disks), x0, y0, nx, ny, res)
        })
    });
    group.finish();
}

criterion_group!(benches, bench_cech_build, bench_grid_fill);
criterion_main!(benches);
