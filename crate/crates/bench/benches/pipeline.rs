use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use vulnlabel_bench::synthetic_split;
use vulnlabel_core::eval::{evaluate_stream, StreamOptions};
use vulnlabel_core::pipeline::{FittedPipeline, PipelineConfig};
use vulnlabel_core::temporal::{AdjustmentParams, LruCache, VersionStore};

fn train(c: &mut Criterion) {
    let split = synthetic_split(1200);
    let cfg = PipelineConfig::default();
    let mut g = c.benchmark_group("train");
    g.sample_size(10);
    g.bench_function("fit_600_reports", |b| {
        b.iter(|| FittedPipeline::fit(&split.train, &cfg).unwrap())
    });
    g.finish();
}

fn inference(c: &mut Criterion) {
    let split = synthetic_split(1200);
    let pipeline = FittedPipeline::fit(&split.train, &PipelineConfig::default()).unwrap();
    let store = VersionStore::build(pipeline.label_set.ids.iter());
    let mut cache = LruCache::new(300).unwrap();
    for r in &split.train.reports {
        cache.observe(&r.labels);
    }
    let params = AdjustmentParams::default();
    let report = &split.test.reports[0];
    c.bench_function("predict_adjusted", |b| {
        b.iter(|| {
            pipeline
                .predict(report, Some((&store, &cache, &params)), 3)
                .unwrap()
        })
    });
    c.bench_function("predict_raw", |b| {
        b.iter(|| pipeline.predict(report, None, 3).unwrap())
    });
    let mut g = c.benchmark_group("stream");
    g.sample_size(10);
    g.bench_function("evaluate_test_split", |b| {
        b.iter_batched(
            StreamOptions::default,
            |opts| evaluate_stream(&pipeline, &[&split.train], &split.test, &opts).unwrap(),
            BatchSize::SmallInput,
        )
    });
    g.finish();
}

fn cache_ops(c: &mut Criterion) {
    let split = synthetic_split(1200);
    c.bench_function("lru_observe_stream", |b| {
        b.iter(|| {
            let mut cache = LruCache::new(300).unwrap();
            for r in &split.train.reports {
                cache.observe(&r.labels);
            }
            cache
        })
    });
}

criterion_group!(benches, train, inference, cache_ops);
criterion_main!(benches);
