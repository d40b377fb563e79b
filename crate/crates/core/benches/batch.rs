//! Sequential against rayon execution of the same multi-core scenario.
//! Without the `parallel` feature both arms run sequentially.

use std::path::Path;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mcc::cc::AlgorithmId;
use mcc::harness::{self, run_batch, ExecOptions, Scenario};

fn scenario() -> Scenario {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/s2.conf");
    let mut s = Scenario::load(&p).expect("s2 fixture");
    // A quarter of S2 keeps one sample under a second.
    s.flows.retain(|f| f.flow_id.0 % 4 == 0);
    s
}

fn single_run(c: &mut Criterion) {
    let s = scenario();
    let mut g = c.benchmark_group("run_4_cores");
    for parallel in [false, true] {
        let name = if parallel { "parallel" } else { "sequential" };
        g.bench_with_input(BenchmarkId::from_parameter(name), &parallel, |b, &parallel| {
            b.iter(|| harness::run(&s, ExecOptions { parallel }).unwrap())
        });
    }
    g.finish();
}

fn batch(c: &mut Criterion) {
    let base = scenario();
    let runs = [
        base.clone(),
        base.unified(AlgorithmId::BbrLite),
        base.unified(AlgorithmId::Westwood),
    ];
    let mut g = c.benchmark_group("batch_of_3");
    for parallel in [false, true] {
        let name = if parallel { "parallel" } else { "sequential" };
        g.bench_with_input(BenchmarkId::from_parameter(name), &parallel, |b, &parallel| {
            b.iter(|| run_batch(&runs, ExecOptions { parallel }))
        });
    }
    g.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = single_run, batch
}
criterion_main!(benches);
