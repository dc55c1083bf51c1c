//! Description and label enrichment.
//!
//! Descriptions are cleaned, stemmed and filtered, then extended with the
//! tokens of references hosted on a small set of high-signal domains. The
//! reference tokens go through corpus-level frequency pruning first. Label
//! names are expanded into sub-word feature text so that unseen libraries
//! share features with seen ones.

mod references;
mod subword;
mod text;

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

pub use references::{prune_reference_tokens, select_references, ReferenceDoc, ReferencePruner};
pub use subword::{
    camel_split, delimiter_split, plain_label_text, split_label_subwords, SubwordDictionary,
};
pub use text::{clean_text, default_stopwords, stem, stem_and_filter, DEFAULT_STOPWORDS};

use crate::corpus::{Dataset, Label, VulnerabilityReport};
use crate::error::{Error, Result};

/// Reference domains used for enrichment by default.
pub const DEFAULT_DOMAINS: &[&str] = &[
    "access.redhat.com",
    "list.opensuse.org",
    "github.com",
    "debian.org",
    "oracle.com",
    "securitytracker.com",
    "security.gentoo.org",
    "ubuntu.com",
    "usn.ubuntu.com",
    "openwall.com",
    "lists.fedoraproject.org",
    "bugzilla.redhat.com",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnhanceConfig {
    pub domain_allowlist: BTreeSet<String>,
    /// Percentage of distinct reference words (most frequent first) to drop.
    pub top_word_cut_percent: f64,
    /// Words occurring more than this many times inside a single reference
    /// are dropped from it. `None` disables the cap.
    pub per_reference_cap: Option<usize>,
    pub stopwords: BTreeSet<String>,
    /// Description words whose document frequency exceeds this fraction of
    /// the training descriptions are dropped.
    pub description_df_cut: f64,
}

impl Default for EnhanceConfig {
    fn default() -> Self {
        EnhanceConfig {
            domain_allowlist: DEFAULT_DOMAINS.iter().map(|s| s.to_string()).collect(),
            top_word_cut_percent: 50.0,
            per_reference_cap: Some(15),
            stopwords: default_stopwords(),
            description_df_cut: 0.3,
        }
    }
}

impl EnhanceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=100.0).contains(&self.top_word_cut_percent) {
            return Err(Error::Config(format!(
                "x must lie in [0, 100], got {}",
                self.top_word_cut_percent
            )));
        }
        if self.per_reference_cap == Some(0) {
            return Err(Error::Config("y must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.description_df_cut) {
            return Err(Error::Config(format!(
                "description df cut must lie in [0, 1], got {}",
                self.description_df_cut
            )));
        }
        Ok(())
    }
}

/// Drops description words that occur in too many training descriptions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescriptionFilter {
    pub removed: BTreeSet<String>,
}

impl DescriptionFilter {
    pub fn fit<'a>(docs: impl IntoIterator<Item = &'a [String]>, max_df_fraction: f64) -> Self {
        let mut df: HashMap<&str, usize> = HashMap::new();
        let mut n = 0usize;
        for doc in docs {
            n += 1;
            let uniq: HashSet<&str> = doc.iter().map(String::as_str).collect();
            for w in uniq {
                *df.entry(w).or_default() += 1;
            }
        }
        let limit = max_df_fraction * n as f64;
        DescriptionFilter {
            removed: df
                .into_iter()
                .filter(|&(_, c)| c as f64 > limit)
                .map(|(w, _)| w.to_string())
                .collect(),
        }
    }

    pub fn apply(&self, tokens: Vec<String>) -> Vec<String> {
        tokens
            .into_iter()
            .filter(|t| !self.removed.contains(t))
            .collect()
    }
}

/// Space-joined enriched description tokens.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnhancedDescription(pub String);

impl EnhancedDescription {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Description tokens first, then each kept reference's tokens in order.
pub fn merge_description(
    _report: &VulnerabilityReport,
    kept_refs_tokens: &[Vec<String>],
    desc_tokens: &[String],
) -> EnhancedDescription {
    let all: Vec<&str> = desc_tokens
        .iter()
        .chain(kept_refs_tokens.iter().flatten())
        .map(String::as_str)
        .collect();
    EnhancedDescription(all.join(" "))
}

pub fn description_tokens(report: &VulnerabilityReport, cfg: &EnhanceConfig) -> Vec<String> {
    stem_and_filter(&clean_text(&report.description), &cfg.stopwords)
}

pub fn reference_tokens(report: &VulnerabilityReport, cfg: &EnhanceConfig) -> Vec<Vec<String>> {
    select_references(report, cfg)
        .into_iter()
        .map(|r| stem_and_filter(&clean_text(&r.content()), &cfg.stopwords))
        .collect()
}

/// Enrichment state fitted on the training split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Enhancer {
    pub config: EnhanceConfig,
    pub use_references: bool,
    pub pruner: ReferencePruner,
    pub description_filter: DescriptionFilter,
}

impl Enhancer {
    /// Both corpus-level passes (description document frequencies and
    /// reference word counts) read `train` only.
    pub fn fit(train: &Dataset, config: EnhanceConfig, use_references: bool) -> Self {
        let desc: Vec<Vec<String>> = train
            .reports
            .iter()
            .map(|r| description_tokens(r, &config))
            .collect();
        let description_filter =
            DescriptionFilter::fit(desc.iter().map(Vec::as_slice), config.description_df_cut);
        let pruner = if use_references {
            let refs: Vec<Vec<String>> = train
                .reports
                .iter()
                .flat_map(|r| reference_tokens(r, &config))
                .collect();
            ReferencePruner::fit(refs.iter().map(Vec::as_slice), &config)
        } else {
            ReferencePruner::default()
        };
        Enhancer {
            config,
            use_references,
            pruner,
            description_filter,
        }
    }

    pub fn enhance(&self, report: &VulnerabilityReport) -> EnhancedDescription {
        let desc = self
            .description_filter
            .apply(description_tokens(report, &self.config));
        let refs: Vec<Vec<String>> = if self.use_references {
            reference_tokens(report, &self.config)
                .iter()
                .map(|t| self.pruner.apply(t))
                .collect()
        } else {
            Vec::new()
        };
        merge_description(report, &refs, &desc)
    }
}

/// Fills `feature_text` for every label in the universe.
pub fn enrich_labels<'a>(labels: impl IntoIterator<Item = &'a mut Label>, subwords: bool) {
    let labels: Vec<&mut Label> = labels.into_iter().collect();
    if subwords {
        let dict = SubwordDictionary::from_labels(labels.iter().map(|l| &**l));
        for l in labels {
            l.feature_text = split_label_subwords(l, &dict);
        }
    } else {
        for l in labels {
            l.feature_text = plain_label_text(l);
        }
    }
}
