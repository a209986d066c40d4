use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use skq::baselines::exhaustive_topk_with;
use skq::engine::{answer_batch, prepare, EngineConfig};
use skq::synth::{random_graph, random_query, GraphShape, InstanceShape};
use skq::{Execution, IndexBundle, IndexParams, SkQuery};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn index_build(c: &mut Criterion) {
    let mut group = c.benchmark_group("index_build");
    group.sample_size(10);
    for n in [500, 2000] {
        let graph = random_graph(7, &GraphShape::scaled(n));
        let params = IndexParams::for_graph(&graph);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &graph, |b, g| {
                b.iter(|| black_box(IndexBundle::build(g, params, exec)))
            });
        }
    }
    group.finish();
}

fn exhaustive(c: &mut Criterion) {
    let graph = random_graph(11, &GraphShape::scaled(400));
    let index = IndexBundle::build(&graph, IndexParams::for_graph(&graph), Execution::Sequential);
    let config = EngineConfig::default();
    let query = random_query(3, &graph, &InstanceShape::default());
    let Ok(Ok(prepared)) = prepare(&graph, &index.keywords, &query, &config) else {
        return;
    };
    let mut group = c.benchmark_group("exhaustive_topk");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| black_box(exhaustive_topk_with(&graph, &prepared, &config, exec).unwrap()))
        });
    }
    group.finish();
}

fn batch(c: &mut Criterion) {
    let graph = random_graph(13, &GraphShape::scaled(300));
    let index = IndexBundle::build(&graph, IndexParams::for_graph(&graph), Execution::Sequential);
    let config = EngineConfig::default();
    let queries: Vec<SkQuery> = (0..32).map(|s| random_query(s, &graph, &InstanceShape::default())).collect();
    let mut group = c.benchmark_group("answer_batch");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| black_box(answer_batch(&graph, &index, &queries, &config, exec)))
        });
    }
    group.finish();
}

criterion_group!(benches, index_build, exhaustive, batch);
criterion_main!(benches);
