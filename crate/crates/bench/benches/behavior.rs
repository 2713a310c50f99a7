use bigpolar::average::AvgConditionalTable;
use bigpolar::{exact_behavior, mc_behavior, Kernel, Seed};
use criterion::{criterion_group, criterion_main, Criterion};

fn bench_behavior(c: &mut Criterion) {
    let mut group = c.benchmark_group("behavior");
    group.sample_size(10);
    let k16 = Kernel::sample(16, Seed::new(1)).unwrap();
    group.bench_function("exact_l16", |b| b.iter(|| exact_behavior(&k16).unwrap()));
    let k64 = Kernel::sample(64, Seed::new(2)).unwrap();
    group.bench_function("mc_l64_1000", |b| b.iter(|| mc_behavior(&k64, 1000, Seed::new(3)).unwrap()));
    group.bench_function("avg_table_l64", |b| b.iter(|| AvgConditionalTable::new(64).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_behavior);
criterion_main!(benches);
