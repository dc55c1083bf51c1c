use std::collections::BTreeSet;

use proptest::prelude::*;
use vulnlabel_core::corpus::{
    chronological_split, load_dataset, unseen_census, write_dataset, Granularity, LoadMode,
    SplitSpec,
};
use vulnlabel_core::eval::{evaluate_stream, StreamOptions};
use vulnlabel_core::pipeline::{FittedPipeline, PipelineConfig, DOC_VOCAB_FILE};
use vulnlabel_core::synthetic::{generate, SyntheticConfig};
use vulnlabel_core::temporal::{LruCache, VersionStore};
use vulnlabel_core::{Dataset, Error};

fn corpus(n: usize, seed: u64) -> Dataset {
    generate(&SyntheticConfig {
        n_reports: n,
        seed,
        ..Default::default()
    })
    .unwrap()
}

#[test]
fn dataset_file_round_trip() {
    let data = corpus(80, 3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.jsonl");
    write_dataset(&data, &path).unwrap();
    assert_eq!(load_dataset(&path, LoadMode::Labeled).unwrap(), data);
}

#[test]
fn saved_pipeline_predicts_identically() {
    let data = corpus(120, 4);
    let split = chronological_split(&data, SplitSpec::default()).unwrap();
    let fitted = FittedPipeline::fit(&split.train, &PipelineConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    fitted.save(dir.path()).unwrap();
    let loaded = FittedPipeline::load(dir.path()).unwrap();
    let store = VersionStore::build(fitted.label_set.ids.iter());
    let mut cache = LruCache::new(50).unwrap();
    for r in &split.train.reports {
        cache.observe(&r.labels);
    }
    let params = Default::default();
    for r in &split.test.reports {
        assert_eq!(
            fitted
                .predict(r, Some((&store, &cache, &params)), 5)
                .unwrap(),
            loaded
                .predict(r, Some((&store, &cache, &params)), 5)
                .unwrap()
        );
    }
}

#[test]
fn tampered_vocabulary_is_rejected() {
    let data = corpus(60, 5);
    let fitted = FittedPipeline::fit(&data, &PipelineConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    fitted.save(dir.path()).unwrap();
    let vocab = dir.path().join(DOC_VOCAB_FILE);
    let mut text = std::fs::read_to_string(&vocab).unwrap();
    text.push_str("zzzz\t1\n");
    std::fs::write(&vocab, text).unwrap();
    assert!(FittedPipeline::load(dir.path()).is_err());
}

#[test]
fn stream_without_prewarm_starts_cold() {
    let data = corpus(150, 6);
    let split = chronological_split(&data, SplitSpec::default()).unwrap();
    let p = FittedPipeline::fit(&split.train, &PipelineConfig::default()).unwrap();
    let cold = StreamOptions {
        prewarm: false,
        ..Default::default()
    };
    let out = evaluate_stream(&p, &[&split.train], &split.test, &cold).unwrap();
    assert!(!out.predictions[0].ranked.iter().any(|a| a.in_cache));
    assert_eq!(out.predictions.len(), split.test.len());
    let warm =
        evaluate_stream(&p, &[&split.train], &split.test, &StreamOptions::default()).unwrap();
    assert!(warm.predictions[0].ranked.iter().any(|a| a.in_cache));
}

#[test]
fn empty_cutoff_list_is_an_error() {
    let data = corpus(60, 8);
    let split = chronological_split(&data, SplitSpec::default()).unwrap();
    let p = FittedPipeline::fit(&split.train, &PipelineConfig::default()).unwrap();
    let opts = StreamOptions {
        ks: vec![],
        ..Default::default()
    };
    assert!(matches!(
        evaluate_stream(&p, &[], &split.test, &opts),
        Err(Error::Empty(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn split_partitions_chronologically(n in 20usize..200, seed in 0u64..1000, a in 1u32..5, b in 1u32..5, c in 1u32..5) {
        let data = corpus(n, seed);
        let split = chronological_split(&data, SplitSpec::Ratio([a, b, c])).unwrap();
        let parts = [&split.train, &split.validation, &split.test];
        prop_assert_eq!(parts.iter().map(|p| p.len()).sum::<usize>(), data.len());
        for w in parts.windows(2) {
            if let (Some(x), Some(y)) = (w[0].reports.last(), w[1].reports.first()) {
                prop_assert!(x.published < y.published);
            }
        }
        for p in parts {
            prop_assert_eq!(&p.labels, &data.labels);
        }
        let census = unseen_census(&split, Granularity::PerSplit);
        let train = census.period("train").unwrap();
        prop_assert_eq!(train.seen_labels, 0);
        let ids: BTreeSet<&str> = parts.iter().flat_map(|p| p.reports.iter().map(|r| r.id.as_str())).collect();
        prop_assert_eq!(ids.len(), data.len());
    }
}
