use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::EnhanceConfig;
use crate::corpus::VulnerabilityReport;

/// A web reference attached to a report, with pre-fetched page content.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceDoc {
    pub url: String,
    /// Lowercased host with any leading `www.`; `None` when the url does
    /// not parse.
    pub domain: Option<String>,
    pub title: Option<String>,
    pub text: Option<String>,
}

impl ReferenceDoc {
    pub fn new(url: String, title: Option<String>, text: Option<String>) -> Self {
        let domain = url::Url::parse(url.trim())
            .ok()
            .and_then(|u| u.host_str().map(str::to_ascii_lowercase))
            .map(|h| h.strip_prefix("www.").map(str::to_string).unwrap_or(h));
        ReferenceDoc {
            url,
            domain,
            title,
            text,
        }
    }

    /// Title followed by body text.
    pub fn content(&self) -> String {
        let mut out = String::new();
        for part in [&self.title, &self.text].into_iter().flatten() {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(part);
        }
        out
    }
}

fn domain_allowed(domain: &str, allowlist: &BTreeSet<String>) -> bool {
    allowlist.iter().any(|d| {
        domain == d
            || domain
                .strip_suffix(d.as_str())
                .is_some_and(|head| head.ends_with('.'))
    })
}

/// References whose host is an allowlisted domain or one of its
/// subdomains, in report order.
pub fn select_references<'a>(
    report: &'a VulnerabilityReport,
    cfg: &EnhanceConfig,
) -> Vec<&'a ReferenceDoc> {
    report
        .references
        .iter()
        .filter(|r| match &r.domain {
            Some(d) => domain_allowed(d, &cfg.domain_allowlist),
            None => {
                log::warn!(
                    "{}: skipping malformed reference url {:?}",
                    report.id,
                    r.url
                );
                false
            }
        })
        .collect()
}

/// Corpus-level pruning state for reference tokens: the globally frequent
/// words to drop plus the per-reference repetition cap.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferencePruner {
    pub removed: BTreeSet<String>,
    pub per_reference_cap: Option<usize>,
}

impl ReferencePruner {
    /// Counts word occurrences over `lists` and marks the top
    /// `ceil(x% of distinct words)` for removal. Ties on count go to the
    /// lexicographically smaller word first.
    pub fn fit<'a, I>(lists: I, cfg: &EnhanceConfig) -> Self
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for list in lists {
            for t in list {
                *counts.entry(t.as_str()).or_default() += 1;
            }
        }
        let n_remove = ((cfg.top_word_cut_percent / 100.0) * counts.len() as f64 - 1e-9)
            .ceil()
            .max(0.0) as usize;
        let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        ReferencePruner {
            removed: ranked
                .into_iter()
                .take(n_remove)
                .map(|(w, _)| w.to_string())
                .collect(),
            per_reference_cap: cfg.per_reference_cap,
        }
    }

    /// Prunes the tokens of one reference.
    pub fn apply(&self, tokens: &[String]) -> Vec<String> {
        let kept: Vec<&String> = tokens
            .iter()
            .filter(|t| !self.removed.contains(t.as_str()))
            .collect();
        let Some(cap) = self.per_reference_cap else {
            return kept.into_iter().cloned().collect();
        };
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for t in &kept {
            *counts.entry(t.as_str()).or_default() += 1;
        }
        kept.into_iter()
            .filter(|t| counts[t.as_str()] <= cap)
            .cloned()
            .collect()
    }
}

/// Fits the pruner on `ref_token_lists` and applies it to each list.
pub fn prune_reference_tokens(
    ref_token_lists: &[Vec<String>],
    cfg: &EnhanceConfig,
) -> Vec<Vec<String>> {
    let pruner = ReferencePruner::fit(ref_token_lists.iter().map(Vec::as_slice), cfg);
    ref_token_lists.iter().map(|l| pruner.apply(l)).collect()
}
