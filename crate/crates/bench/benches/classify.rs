use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use sobspec_core::spectra::{
    boundary_conditions, boundary_matrix, classify, kernel_dimension, lambda_grid, spectrum_table,
    DomainVariant, DEFAULT_RANK_TOL,
};
use sobspec_core::symbol::{characteristic_roots, OperatorSide, SymbolPoly};

const I_PI: (f64, f64) = (0.0, PI);

fn quartic() -> SymbolPoly {
    SymbolPoly::new(vec![
        C64::new(0.4, -0.1),
        C64::new(1.0, 0.5),
        C64::new(-0.3, 0.0),
        C64::new(0.0, 1.2),
        C64::new(0.8, -0.6),
    ])
    .unwrap()
}

fn bench_root_finding(c: &mut Criterion) {
    let mut group = c.benchmark_group("characteristic_roots");
    for (label, sym) in [("m2", SymbolPoly::laplacian()), ("m4", quartic())] {
        let lambda = C64::new(2.0, 1.0);
        group.bench_with_input(BenchmarkId::from_parameter(label), &sym, |b, sym| {
            b.iter(|| characteristic_roots(black_box(sym), lambda, OperatorSide::Direct).unwrap())
        });
    }
    group.finish();
}

fn bench_kernel_dimension(c: &mut Criterion) {
    let sym = quartic();
    let bcs = boundary_conditions(DomainVariant::MinimalSupport, sym.order()).unwrap();
    let bm = boundary_matrix(&sym, C64::new(2.0, 1.0), I_PI, &bcs, OperatorSide::Direct).unwrap();
    c.bench_function("kernel_dimension_8x4", |b| {
        b.iter(|| kernel_dimension(black_box(&bm), DEFAULT_RANK_TOL))
    });
}

fn bench_classify(c: &mut Criterion) {
    let sym = SymbolPoly::laplacian();
    c.bench_function("classify_minimal_support", |b| {
        b.iter(|| {
            classify(
                black_box(&sym),
                C64::new(3.0, -2.0),
                DomainVariant::MinimalSupport,
                I_PI,
                DEFAULT_RANK_TOL,
            )
            .unwrap()
        })
    });
}

fn bench_table_sweep(c: &mut Criterion) {
    let sym = SymbolPoly::laplacian();
    let samples = lambda_grid((-12.0, 12.0), (-12.0, 12.0), 8, &[]);
    let variants = [
        DomainVariant::MinimalSupport,
        DomainVariant::DirichletGraph,
        DomainVariant::ClosureLocal,
    ];
    c.bench_function("spectrum_table_64_lambda", |b| {
        b.iter(|| {
            spectrum_table(
                black_box(&sym),
                I_PI,
                0.0,
                black_box(&samples),
                &variants,
                DEFAULT_RANK_TOL,
            )
            .unwrap()
        })
    });
}

criterion_group!(
    benches,
    bench_root_finding,
    bench_kernel_dimension,
    bench_classify,
    bench_table_sweep
);
criterion_main!(benches);
