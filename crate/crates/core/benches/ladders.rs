use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use orthoasym::exec::Execution;
use orthoasym::measure::Precision;
use orthoasym::verify::{bundled, run_verification};
use std::hint::black_box;

fn ladders(c: &mut Criterion) {
    let mut group = c.benchmark_group("verification");
    group.sample_size(20);
    for name in ["modified_complex_rational", "sobolev_general", "pade_gonchar"] {
        let cfg = bundled(name).unwrap();
        for (label, mode) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            group.bench_with_input(BenchmarkId::new(label, name), &cfg, |b, cfg| {
                b.iter(|| run_verification(black_box(cfg), Precision::Double, mode).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, ladders);
criterion_main!(benches);
