use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use ngbound::metrics::summarize;
use ngbound::oracle::min_purity_qp;
use ngbound::region1::{decreasing_branch, rank2_point, region1_exact};
use ngbound::region2::{assy_family, total_bound_at};
use ngbound::wigner::{GridSpec, WignerGrid};
use ngbound::FockDensityMatrix;
use num_complex::Complex64;

fn displaced(dim: usize) -> FockDensityMatrix {
    let v: Vec<Complex64> = (0..dim).map(|n| Complex64::from_polar(1.0 / (1.0 + n as f64), 0.7 * n as f64)).collect();
    FockDensityMatrix::from_pure(&v).unwrap()
}

fn wigner(c: &mut Criterion) {
    let mut g = c.benchmark_group("wigner_grid_201");
    for dim in [8, 24, 64] {
        let rho = displaced(dim);
        g.bench_with_input(BenchmarkId::from_parameter(dim), &rho, |b, rho| {
            b.iter(|| WignerGrid::sample(rho, GridSpec::default()).unwrap())
        });
    }
    g.finish();
}

fn metrics(c: &mut Criterion) {
    let mut g = c.benchmark_group("summarize");
    for dim in [8, 24] {
        let rho = displaced(dim);
        g.bench_with_input(BenchmarkId::new("displaced", dim), &rho, |b, rho| b.iter(|| summarize(rho).unwrap()));
    }
    let rho3 = assy_family(1, 0.35, Complex64::from_polar(0.3, 1.1)).unwrap().state;
    g.bench_function("rho_3", |b| b.iter(|| summarize(&rho3).unwrap()));
    g.finish();
}

fn sheets(c: &mut Criterion) {
    c.bench_function("region1_exact", |b| b.iter(|| region1_exact(black_box(0.3), black_box(5.5), 0).unwrap()));
    c.bench_function("decreasing_branch_0.05", |b| b.iter(|| decreasing_branch(black_box(0.05)).unwrap()));
    c.bench_function("total_bound_at", |b| b.iter(|| total_bound_at(black_box(0.23), black_box(0.85)).unwrap()));
}

fn qp(c: &mut Criterion) {
    let edge = rank2_point(0.4).unwrap().overlap;
    let t = edge + 0.5 * (0.4 - edge);
    let mut g = c.benchmark_group("min_purity_qp");
    g.sample_size(10);
    g.bench_function("mu_g_0.4", |b| b.iter(|| min_purity_qp(0.4, black_box(t), 40).unwrap()));
    g.finish();
}

criterion_group!(benches, wigner, metrics, sheets, qp);
criterion_main!(benches);
