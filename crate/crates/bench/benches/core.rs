use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use oscillab_core::derivlab::{robust_derivative, verify_membership, log_grid};
use oscillab_core::plateau::build_ladder;
use oscillab_core::quadrature::{certified_nonneg_realpart_exact, compute_m_direct};
use oscillab_core::{CarlemanFamily, FamilySpec, PhaseSpec, QuadratureConfig};

fn quadrature(c: &mut Criterion) {
    let phase = PhaseSpec::gevrey(2.0).compile().unwrap();
    let cfg = QuadratureConfig::default();
    let mut g = c.benchmark_group("compute_m_direct");
    for lambda in [1e2, 1e4, 1e6] {
        g.bench_with_input(BenchmarkId::from_parameter(lambda), &lambda, |b, &l| b.iter(|| compute_m_direct(&phase, black_box(l), &cfg).unwrap()));
    }
    g.finish();

    let plateau = PhaseSpec::plateau(2, 1).compile().unwrap();
    let ladder = build_ladder(2, 1, 12).unwrap();
    c.bench_function("certified_plateau_q12", |b| b.iter(|| certified_nonneg_realpart_exact(&plateau, black_box(ladder.lambda(12))).unwrap()));
}

fn carleman(c: &mut Criterion) {
    let fam = CarlemanFamily::new(FamilySpec::Gevrey { s: 2.0 }).unwrap();
    c.bench_function("legendre_gevrey2", |b| b.iter(|| fam.legendre(black_box(4.6)).unwrap()));
    c.bench_function("inverse_tail_gevrey2", |b| b.iter(|| fam.inverse_tail(black_box(1e-3)).unwrap()));
}

fn derivlab(c: &mut Criterion) {
    let phase = PhaseSpec::gevrey(2.0).compile().unwrap();
    c.bench_function("robust_derivative_n12", |b| b.iter(|| robust_derivative(&phase, black_box(0.1), 12).unwrap()));
    let fam = CarlemanFamily::new(FamilySpec::Gevrey { s: 2.0 }).unwrap();
    let grid = log_grid(0.01, 1.0, 16);
    c.bench_function("membership_gevrey2", |b| b.iter(|| verify_membership(&phase, &fam, 0..=12, &grid).unwrap()));
}

criterion_group!(benches, quadrature, carleman, derivlab);
criterion_main!(benches);
