use criterion::{criterion_group, criterion_main, Criterion};
use uatest_bench::hotspot_halves;
use uatest_core::metrics::{Measure, Metric};
use uatest_core::synth::TREE_BENCH_ATTRIBUTES;
use uatest_core::tree::{exhaustive_contexts, find_contexts, TreeParams};

fn search(c: &mut Criterion) {
    let (train, _) = hotspot_halves(40_000, 1);
    let measure = Measure::new(train.data(), Metric::Diff, "Group", "Output", None).unwrap();
    let ctx: Vec<usize> = (0..TREE_BENCH_ATTRIBUTES).collect();
    let params = TreeParams {
        min_size: 500,
        max_depth: 5,
        ..TreeParams::default()
    };
    let mut group = c.benchmark_group("context search 20k rows");
    group.sample_size(10);
    group.bench_function("guided tree", |b| b.iter(|| find_contexts(&train, &measure, &ctx, &params).unwrap()));
    group.bench_function("exhaustive itemsets", |b| b.iter(|| exhaustive_contexts(&train, &measure, &ctx, 500, 3).unwrap()));
    group.finish();
}

criterion_group!(benches, search);
criterion_main!(benches);
