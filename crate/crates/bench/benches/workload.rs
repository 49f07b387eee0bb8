use criterion::{criterion_group, criterion_main, Criterion};
use lake_bench::fixture_lake;
use lake_core::fixture::FixtureSpec;
use lake_core::workload::{execute_query, plan_workload};

fn workload(c: &mut Criterion) {
    let bl = fixture_lake(&FixtureSpec::default()).expect("fixture lake");
    let plan = plan_workload(&bl.lake).expect("workload plan");
    let mut group = c.benchmark_group("workload");
    group.sample_size(10);
    for q in &plan {
        group.bench_function(format!("q{:02}", q.id), |b| {
            b.iter(|| execute_query(&bl.lake, &q.query).expect("query"))
        });
    }
    group.finish();
}

fn ingest(c: &mut Criterion) {
    let spec = FixtureSpec {
        documents: 60,
        ..FixtureSpec::default()
    };
    let mut group = c.benchmark_group("ingest");
    group.sample_size(10);
    group.bench_function("fixture_60_docs", |b| b.iter(|| fixture_lake(&spec).expect("ingest")));
    group.finish();
}

criterion_group!(benches, workload, ingest);
criterion_main!(benches);
