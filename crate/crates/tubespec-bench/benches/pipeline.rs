//! Benchmarks of the hot paths: lattice enumeration, the gap scan, mode
//! matrix assembly with eigendecomposition, and the global solve.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use num_complex::Complex64;
use tubespec_core::fourier::ProductFunction;
use tubespec_core::lattice::{enumerate_ball, FreqG};
use tubespec_core::operator::mode_matrix;
use tubespec_core::presets;
use tubespec_core::solver::{solve_global, SolveOptions};
use tubespec_core::system::{build_system, gamma_of, shell_min_gaps};

fn bench_lattice(c: &mut Criterion) {
    c.bench_function("enumerate_ball_2d_r100", |b| {
        b.iter(|| enumerate_ball(2, black_box(100.0)).unwrap().len())
    });
}

fn bench_gap_scan(c: &mut Criterion) {
    let system = build_system(&presets::e2()).unwrap();
    let gamma = gamma_of(&system).unwrap();
    c.bench_function("shell_min_gaps_e2_r500", |b| {
        b.iter(|| {
            shell_min_gaps(&system, &gamma, black_box(500.0), u64::MAX)
                .unwrap()
                .len()
        })
    });
}

fn bench_mode_matrix(c: &mut Criterion) {
    let spec = presets::e4();
    c.bench_function("mode_matrix_k32_eigen", |b| {
        b.iter(|| {
            let m = mode_matrix(&spec, &FreqG(vec![3, 1]), black_box(32)).unwrap();
            m.entries.symmetric_eigen().eigenvalues.len()
        })
    });
}

fn bench_solve(c: &mut Criterion) {
    let spec = presets::e4();
    let gamma = gamma_of(&build_system(&spec).unwrap()).unwrap();
    let mut f = ProductFunction::zero(1, 2);
    for xi1 in -4i64..=4 {
        for xi2 in -4i64..=4 {
            if xi1 * xi1 + xi2 * xi2 <= 16 && (xi1, xi2) != (0, 0) {
                f.set(vec![1], vec![xi1, xi2], Complex64::new(0.1, 0.05));
                f.set(vec![-1], vec![-xi1, -xi2], Complex64::new(0.1, -0.05));
            }
        }
    }
    c.bench_function("solve_global_e4_k8_r4", |b| {
        b.iter(|| {
            solve_global(
                &spec,
                &gamma,
                &f,
                black_box(8),
                4.0,
                &SolveOptions::default(),
            )
            .unwrap()
            .per_mode
            .len()
        })
    });
}

criterion_group!(
    benches,
    bench_lattice,
    bench_gap_scan,
    bench_mode_matrix,
    bench_solve
);
criterion_main!(benches);
