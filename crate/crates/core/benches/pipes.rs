use std::time::Duration;

use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use mcc::harness::bench::{naive_transfer, selector_fold, spsc_transfer};

const RECORDS: u64 = 100_000;

fn transfer(c: &mut Criterion) {
    let mut g = c.benchmark_group("upward_transfer");
    g.throughput(Throughput::Elements(RECORDS));
    g.bench_function("spsc_ring", |b| {
        b.iter_custom(|iters| (0..iters).map(|_| spsc_transfer(RECORDS, 1024)).sum::<Duration>())
    });
    g.bench_function("alloc_and_copy", |b| {
        b.iter_custom(|iters| (0..iters).map(|_| naive_transfer(RECORDS)).sum::<Duration>())
    });
    g.finish();
}

fn fold(c: &mut Criterion) {
    let mut g = c.benchmark_group("selector");
    g.throughput(Throughput::Elements(RECORDS));
    g.bench_function("fold_and_rule", |b| {
        b.iter_custom(|iters| (0..iters).map(|_| selector_fold(RECORDS)).sum::<Duration>())
    });
    g.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = transfer, fold
}
criterion_main!(benches);
