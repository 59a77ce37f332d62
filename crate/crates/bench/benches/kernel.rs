use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hitprob::{phi, Angle, HTable};

fn h_cold(c: &mut Criterion) {
    let mut group = c.benchmark_group("h_cold");
    for (n, k) in [(1u32, 0i64), (5, 5), (4, 100), (10, 500)] {
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("n{n}_k{k}")),
            &(n, k),
            |b, &(n, k)| b.iter(|| HTable::default().get(black_box(n), black_box(k)).unwrap()),
        );
    }
    group.finish();
}

fn table_warm(c: &mut Criterion) {
    c.bench_function("warm_10x250", |b| {
        b.iter(|| {
            let t = HTable::default();
            t.warm(10, 250).unwrap();
            t.len()
        })
    });
}

fn phi_eval(c: &mut Criterion) {
    c.bench_function("phi", |b| b.iter(|| phi(Angle::new(black_box(1.234)))));
}

criterion_group!(benches, h_cold, table_warm, phi_eval);
criterion_main!(benches);
