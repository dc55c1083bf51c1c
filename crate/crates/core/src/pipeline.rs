//! End-to-end composition: enrichment, featurization, training and
//! prediction. The CLI and the triage service both predict through
//! [`FittedPipeline`], so their outputs agree for equal model and cache
//! state.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Label, LabelId, VulnerabilityReport};
use crate::enhance::{
    clean_text, enrich_labels, plain_label_text, split_label_subwords, stem_and_filter,
    EnhanceConfig, Enhancer, SubwordDictionary,
};
use crate::error::{Error, Result};
use crate::features::{fit_vocabulary, tfidf_transform, CosineIndex, SparseVector, Vocabulary};
use crate::learner::{
    build_training_pairs, predict_topk, relevance_probability, score_all, train, LabelSet,
    LearnerParams, TrainedModel,
};
use crate::temporal::{
    adjust, unadjusted, AdjustedLabel, AdjustmentParams, LruCache, ScoredLabel, VersionStore,
};

pub const MODEL_FILE: &str = "model.txt";
pub const DOC_VOCAB_FILE: &str = "doc_vocab.txt";
pub const LABEL_VOCAB_FILE: &str = "label_vocab.txt";
pub const PIPELINE_FILE: &str = "pipeline.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub enhance: EnhanceConfig,
    /// Reference enrichment and label sub-word expansion. Off reproduces
    /// the plain-description configuration.
    pub use_enhancement: bool,
    pub ngram_max: usize,
    pub min_df: usize,
    pub learner: LearnerParams,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            enhance: EnhanceConfig::default(),
            use_enhancement: true,
            ngram_max: 1,
            min_df: 1,
            learner: LearnerParams::default(),
            seed: 42,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.enhance.validate()?;
        self.learner.validate()?;
        if !(1..=2).contains(&self.ngram_max) {
            return Err(Error::Config(format!(
                "ngram_max must be 1 or 2, got {}",
                self.ngram_max
            )));
        }
        if self.min_df == 0 {
            return Err(Error::Config("min_df must be at least 1".into()));
        }
        Ok(())
    }
}

/// Label feature texts for the whole universe, in id order.
pub fn label_texts(dataset: &Dataset, subwords: bool) -> Vec<Label> {
    let mut labels: Vec<Label> = dataset.labels.values().cloned().collect();
    enrich_labels(labels.iter_mut(), subwords);
    labels
}

/// Label feature text mapped into the stemmed description space.
pub fn label_match_text(label: &Label, cfg: &EnhanceConfig) -> String {
    stem_and_filter(&clean_text(&label.feature_text), &cfg.stopwords).join(" ")
}

#[derive(Serialize, Deserialize)]
struct PipelineMeta {
    format: String,
    config: PipelineConfig,
    enhancer: Enhancer,
    labels: Vec<Label>,
}

const META_FORMAT: &str = "pipeline v1";

#[derive(Clone, Debug)]
pub struct FittedPipeline {
    pub config: PipelineConfig,
    pub enhancer: Enhancer,
    pub doc_vocab: Vocabulary,
    pub label_vocab: Vocabulary,
    pub labels: Vec<Label>,
    pub label_set: LabelSet,
    pub model: TrainedModel,
}

impl FittedPipeline {
    /// Fits every stage on `train`. The label vocabulary covers the whole
    /// universe of `train` so labels never seen in training can still be
    /// scored; training pairs only use labels observed in `train`.
    pub fn fit(train_set: &Dataset, config: &PipelineConfig) -> Result<Self> {
        config.validate()?;
        if train_set.is_empty() {
            return Err(Error::Empty("training split"));
        }
        let enhancer = Enhancer::fit(train_set, config.enhance.clone(), config.use_enhancement);
        let docs_text: Vec<String> = train_set
            .reports
            .iter()
            .map(|r| enhancer.enhance(r).0)
            .collect();
        let doc_vocab = fit_vocabulary(&docs_text, config.ngram_max, config.min_df)?;

        let labels = label_texts(train_set, config.use_enhancement);
        let label_feature_texts: Vec<&str> =
            labels.iter().map(|l| l.feature_text.as_str()).collect();
        let label_vocab = fit_vocabulary(&label_feature_texts, config.ngram_max, 1)?;
        let label_set = featurize_labels(&labels, &label_vocab);

        let docs: Vec<SparseVector> = docs_text
            .iter()
            .map(|t| tfidf_transform(t, &doc_vocab, true))
            .collect();

        // Training labels: those observed in the training reports.
        let observed = train_set.observed_labels();
        let train_labels: Vec<usize> = label_set
            .ids
            .iter()
            .enumerate()
            .filter(|(_, id)| observed.contains(*id))
            .map(|(i, _)| i)
            .collect();
        let local: BTreeMap<&LabelId, u32> = train_labels
            .iter()
            .enumerate()
            .map(|(j, &i)| (&label_set.ids[i], j as u32))
            .collect();
        let positives: Vec<Vec<u32>> = train_set
            .reports
            .iter()
            .map(|r| {
                r.labels
                    .iter()
                    .filter_map(|l| local.get(l).copied())
                    .collect()
            })
            .collect();

        let match_labels: Vec<String> = train_labels
            .iter()
            .map(|&i| label_match_text(&labels[i], &config.enhance))
            .collect();
        let mut match_corpus: Vec<&str> = docs_text.iter().map(String::as_str).collect();
        match_corpus.extend(match_labels.iter().map(String::as_str));
        let match_vocab = fit_vocabulary(&match_corpus, 1, 1)?;
        let doc_match: Vec<SparseVector> = docs_text
            .iter()
            .map(|t| tfidf_transform(t, &match_vocab, false))
            .collect();
        let label_match: Vec<SparseVector> = match_labels
            .iter()
            .map(|t| tfidf_transform(t, &match_vocab, false))
            .collect();
        let index = CosineIndex::new(&label_match, match_vocab.dim(false));

        let pairs =
            build_training_pairs(&positives, &doc_match, &index, &config.learner, config.seed);
        let train_vectors: Vec<SparseVector> = train_labels
            .iter()
            .map(|&i| label_set.vectors[i].clone())
            .collect();
        log::info!(
            "training on {} pairs, {} documents, {} labels",
            pairs.len(),
            docs.len(),
            train_vectors.len()
        );
        let weights = train(&pairs, &docs, &train_vectors, &config.learner)?;
        let model = TrainedModel {
            weights,
            params: config.learner.clone(),
            seed: config.seed,
            doc_vocab_checksum: doc_vocab.checksum(),
            label_vocab_checksum: label_vocab.checksum(),
        };
        Ok(FittedPipeline {
            config: config.clone(),
            enhancer,
            doc_vocab,
            label_vocab,
            labels,
            label_set,
            model,
        })
    }

    /// Adds labels (for example from a later split's universe) so they can
    /// be scored. Existing feature texts are kept; the label vocabulary is
    /// unchanged, so terms it lacks are ignored.
    pub fn extend_labels<'a>(&mut self, ids: impl IntoIterator<Item = &'a LabelId>) {
        let mut all: BTreeMap<LabelId, Label> = self
            .labels
            .iter()
            .map(|l| (l.id.clone(), l.clone()))
            .collect();
        let mut fresh: Vec<Label> = Vec::new();
        for id in ids {
            if !all.contains_key(id) && !fresh.iter().any(|l| &l.id == id) {
                fresh.push(Label::new(id.clone()));
            }
        }
        if fresh.is_empty() {
            return;
        }
        if self.config.use_enhancement {
            let dict = SubwordDictionary::from_labels(all.values().chain(fresh.iter()));
            for l in &mut fresh {
                l.feature_text = split_label_subwords(l, &dict);
            }
        } else {
            for l in &mut fresh {
                l.feature_text = plain_label_text(l);
            }
        }
        all.extend(fresh.into_iter().map(|l| (l.id.clone(), l)));
        self.labels = all.into_values().collect();
        self.label_set = featurize_labels(&self.labels, &self.label_vocab);
    }

    pub fn featurize(&self, report: &VulnerabilityReport) -> SparseVector {
        tfidf_transform(&self.enhancer.enhance(report).0, &self.doc_vocab, true)
    }

    /// Raw relevance of every label, in label-id order.
    pub fn score_all(&self, report: &VulnerabilityReport) -> Result<Vec<f64>> {
        score_all(
            &self.featurize(report),
            &self.label_set,
            &self.model.weights,
        )
    }

    pub fn predict_raw(&self, report: &VulnerabilityReport, n: usize) -> Result<Vec<ScoredLabel>> {
        Ok(predict_topk(
            &self.featurize(report),
            &self.label_set,
            &self.model.weights,
            n,
        )?
        .into_iter()
        .map(ScoredLabel::from)
        .collect())
    }

    /// Top-`k` predictions. With `temporal`, the `params.i` best raw
    /// predictions are re-ranked against the cache and version store first.
    pub fn predict(
        &self,
        report: &VulnerabilityReport,
        temporal: Option<(&VersionStore, &LruCache, &AdjustmentParams)>,
        k: usize,
    ) -> Result<Vec<AdjustedLabel>> {
        Ok(self.rank(&self.score_all(report)?, temporal, k))
    }

    /// Ranking step of [`FittedPipeline::predict`] given raw scores from
    /// [`FittedPipeline::score_all`]. Reported scores are relevance
    /// probabilities; the recency boost scales with their mean, which must
    /// not be negative.
    pub fn rank(
        &self,
        raw: &[f64],
        temporal: Option<(&VersionStore, &LruCache, &AdjustmentParams)>,
        k: usize,
    ) -> Vec<AdjustedLabel> {
        let probs: Vec<f64> = raw.iter().map(|&s| relevance_probability(s)).collect();
        let scores = probs.as_slice();
        let mut out = match temporal {
            Some((store, cache, params)) => {
                let top = top_from_scores(&self.label_set, scores, params.i.max(k));
                let lookup =
                    |l: &LabelId| self.label_set.position(l).map(|p| scores[p]).unwrap_or(0.0);
                let i = params.i.min(top.len());
                let mut adjusted = adjust(&top[..i], lookup, store, cache, params);
                // A window smaller than k is padded with the next raw labels.
                for s in &top[i..] {
                    if adjusted.len() >= k {
                        break;
                    }
                    if !adjusted.iter().any(|a| a.label == s.label) {
                        adjusted.extend(unadjusted(std::slice::from_ref(s), cache));
                    }
                }
                adjusted
            }
            None => {
                let top = top_from_scores(&self.label_set, scores, k);
                let empty = LruCache::new(1).expect("positive capacity");
                unadjusted(&top, &empty)
            }
        };
        out.truncate(k);
        out
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.model.save(&dir.join(MODEL_FILE))?;
        self.doc_vocab.save(&dir.join(DOC_VOCAB_FILE))?;
        self.label_vocab.save(&dir.join(LABEL_VOCAB_FILE))?;
        let meta = PipelineMeta {
            format: META_FORMAT.into(),
            config: self.config.clone(),
            enhancer: self.enhancer.clone(),
            labels: self.labels.clone(),
        };
        let path = dir.join(PIPELINE_FILE);
        std::fs::write(&path, serde_json::to_string_pretty(&meta)?).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(PIPELINE_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let meta: PipelineMeta = serde_json::from_str(&text)?;
        if meta.format != META_FORMAT {
            return Err(Error::Validation(format!(
                "unsupported pipeline format {}",
                meta.format
            )));
        }
        let doc_vocab = Vocabulary::load(&dir.join(DOC_VOCAB_FILE))?;
        let label_vocab = Vocabulary::load(&dir.join(LABEL_VOCAB_FILE))?;
        let model = TrainedModel::load(
            &dir.join(MODEL_FILE),
            &doc_vocab.checksum(),
            &label_vocab.checksum(),
        )?;
        if model.weights.rows() != doc_vocab.dim(true)
            || model.weights.cols() != label_vocab.dim(true)
        {
            return Err(Error::ModelMismatch(
                "weight shape does not match the vocabularies".into(),
            ));
        }
        let label_set = featurize_labels(&meta.labels, &label_vocab);
        Ok(FittedPipeline {
            config: meta.config,
            enhancer: meta.enhancer,
            doc_vocab,
            label_vocab,
            labels: meta.labels,
            label_set,
            model,
        })
    }
}

fn featurize_labels(labels: &[Label], vocab: &Vocabulary) -> LabelSet {
    LabelSet {
        ids: labels.iter().map(|l| l.id.clone()).collect(),
        vectors: labels
            .iter()
            .map(|l| tfidf_transform(&l.feature_text, vocab, true))
            .collect(),
    }
}

/// The `n` best labels by score, ties broken by label id.
pub fn top_from_scores(labels: &LabelSet, scores: &[f64], n: usize) -> Vec<ScoredLabel> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    let cmp = |a: &usize, b: &usize| scores[*b].total_cmp(&scores[*a]).then(a.cmp(b));
    let n = n.min(order.len());
    if n == 0 {
        return Vec::new();
    }
    if n < order.len() {
        order.select_nth_unstable_by(n - 1, cmp);
        order.truncate(n);
    }
    order.sort_by(cmp);
    order
        .into_iter()
        .map(|i| ScoredLabel::new(labels.ids[i].clone(), scores[i]))
        .collect()
}
