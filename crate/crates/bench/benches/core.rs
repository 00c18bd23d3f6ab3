use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use pellrep_core::reduction::{self, expand_cf_certified, InstanceKind, PhiFamily};
use pellrep_core::repdigits::{compose, decompose, RepdigitConcat};
use pellrep_core::search::solve_range;
use pellrep_core::sequences::{dominant_root, term};
use pellrep_core::PrecReal;

fn sequences(c: &mut Criterion) {
    let mut g = c.benchmark_group("sequences");
    for n in [100i64, 1000, 10_000] {
        g.bench_with_input(BenchmarkId::new("term_k10", n), &n, |b, &n| b.iter(|| term(10, black_box(n))));
    }
    for k in [3usize, 100, 3200] {
        g.bench_with_input(BenchmarkId::new("dominant_root_4k_bits", k), &k, |b, &k| {
            b.iter(|| dominant_root(black_box(k), (4 * k as u32).max(256)))
        });
    }
    g.finish();
}

fn repdigits(c: &mut Criterion) {
    let x = compose(&RepdigitConcat::new(7, 40, 3, 40).unwrap());
    c.bench_function("decompose_80_digits", |b| b.iter(|| decompose(black_box(&x))));
}

fn reduction(c: &mut Criterion) {
    let mut g = c.benchmark_group("reduction");
    g.sample_size(10);
    let p = 1024;
    let tau = &PrecReal::from_i64(10, p).ln() / &PrecReal::phi(p).ln();
    g.bench_function("cf_1024_bits", |b| b.iter(|| expand_cf_certified(black_box(&tau))));
    g.bench_function("phi_family_4430_bits", |b| b.iter(|| PhiFamily::new(4430)));
    g.bench_function("gamma1_k100", |b| {
        b.iter(|| reduction::reduce_single(InstanceKind::Gamma1, 100, 1, 0, 1, 256))
    });
    g.finish();
}

fn search(c: &mut Criterion) {
    let mut g = c.benchmark_group("search");
    g.sample_size(10);
    g.bench_function("solve_range_k60_n400", |b| b.iter(|| solve_range(2, 60, 400)));
    g.finish();
}

criterion_group!(benches, sequences, repdigits, reduction, search);
criterion_main!(benches);
