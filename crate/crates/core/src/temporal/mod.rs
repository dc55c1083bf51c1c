//! Time-aware re-ranking of predicted labels: scores move from old library
//! versions to newer ones the analyst has recently confirmed, and labels in
//! the recently-confirmed cache get a recency-weighted boost.

mod cache;
mod version;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

pub use cache::{ground_truth_order, LruCache};
pub use version::{compare_version_strings, parse_and_compare_versions, VersionStore};

use crate::corpus::LabelId;
use crate::error::{Error, Result};

pub const DEFAULT_CACHE_CAPACITY: usize = 300;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdjustmentParams {
    /// Boost magnitude `M`.
    pub m: f64,
    /// Size of the re-ranked window.
    pub i: usize,
}

impl Default for AdjustmentParams {
    fn default() -> Self {
        AdjustmentParams { m: 8.0, i: 10 }
    }
}

impl AdjustmentParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.m.is_finite() && self.m > 0.0) {
            return Err(Error::Config(format!("M must be positive, got {}", self.m)));
        }
        if self.i == 0 {
            return Err(Error::Config("i must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredLabel {
    pub label: LabelId,
    pub score: f64,
}

impl ScoredLabel {
    pub fn new(label: LabelId, score: f64) -> Self {
        ScoredLabel { label, score }
    }
}

impl From<(LabelId, f64)> for ScoredLabel {
    fn from((label, score): (LabelId, f64)) -> Self {
        ScoredLabel { label, score }
    }
}

/// A re-ranked prediction with the provenance of its score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdjustedLabel {
    pub label: LabelId,
    pub score: f64,
    pub raw_score: f64,
    pub in_cache: bool,
    pub recency_index: Option<usize>,
    /// The label received the score of an older version.
    pub version_transferred: bool,
    /// The label's score moved to this newer version.
    pub superseded_by: Option<LabelId>,
}

/// A score transfer from an old version to a cache-resident newer one.
#[derive(Clone, Debug, PartialEq)]
pub struct Transfer {
    pub from: LabelId,
    pub to: LabelId,
}

/// For each of the first `top.len()` entries, finds the newest strictly
/// newer version that is in the cache, raises its score to the old label's
/// score if that is higher, and zeroes the old label. Newer versions absent
/// from `top` are appended with their raw score from `lookup`.
pub fn favor_new_version(
    top: &mut Vec<ScoredLabel>,
    lookup: impl Fn(&LabelId) -> f64,
    store: &VersionStore,
    cache: &LruCache,
) -> Vec<Transfer> {
    let mut transfers = Vec::new();
    if cache.is_empty() {
        return transfers;
    }
    let n = top.len();
    for idx in 0..n {
        let old = top[idx].label.clone();
        let Some(new) = store.newer(&old).iter().find(|l| cache.contains(l)) else {
            continue;
        };
        let pos = match top.iter().position(|s| &s.label == new) {
            Some(p) => p,
            None => {
                top.push(ScoredLabel::new(new.clone(), lookup(new)));
                top.len() - 1
            }
        };
        top[pos].score = top[pos].score.max(top[idx].score);
        top[idx].score = 0.0;
        transfers.push(Transfer {
            from: old,
            to: new.clone(),
        });
    }
    transfers
}

/// Adds `M / (recency + 1) * r_bar` to every cache-resident label. Other
/// scores are left untouched.
pub fn recency_boost(
    top: &mut [ScoredLabel],
    cache: &LruCache,
    params: &AdjustmentParams,
    r_bar: f64,
) {
    for s in top.iter_mut() {
        if let Some(r) = cache.recency(&s.label) {
            let alpha = params.m / (r as f64 + 1.0);
            s.score += alpha * r_bar;
        }
    }
}

/// Mean of the first `n` scores.
pub fn mean_top_score(top: &[ScoredLabel], n: usize) -> f64 {
    let n = n.min(top.len());
    if n == 0 {
        return 0.0;
    }
    top[..n].iter().map(|s| s.score).sum::<f64>() / n as f64
}

fn adjusted_order(a: &AdjustedLabel, b: &AdjustedLabel) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.label.cmp(&b.label))
}

/// Re-ranks the `params.i` best raw predictions: version transfer first,
/// then the recency boost with the mean score taken after transfer, then a
/// descending sort with ties broken by label id.
pub fn adjust(
    top: &[ScoredLabel],
    lookup: impl Fn(&LabelId) -> f64,
    store: &VersionStore,
    cache: &LruCache,
    params: &AdjustmentParams,
) -> Vec<AdjustedLabel> {
    let window = &top[..top.len().min(params.i)];
    let mut work: Vec<ScoredLabel> = window.to_vec();
    let raw: Vec<f64> = work.iter().map(|s| s.score).collect();
    let transfers = favor_new_version(&mut work, &lookup, store, cache);
    let r_bar = mean_top_score(&work, window.len());
    recency_boost(&mut work, cache, params, r_bar);

    let mut out: Vec<AdjustedLabel> = work
        .into_iter()
        .enumerate()
        .map(|(idx, s)| {
            let raw_score = if idx < raw.len() {
                raw[idx]
            } else {
                lookup(&s.label)
            };
            let recency_index = cache.recency(&s.label);
            AdjustedLabel {
                version_transferred: transfers.iter().any(|t| t.to == s.label),
                superseded_by: transfers
                    .iter()
                    .find(|t| t.from == s.label)
                    .map(|t| t.to.clone()),
                in_cache: recency_index.is_some(),
                recency_index,
                raw_score,
                score: s.score,
                label: s.label,
            }
        })
        .collect();
    out.sort_by(adjusted_order);
    out
}

/// The raw ranking in the same shape as [`adjust`] output, for runs with
/// adjustment disabled.
pub fn unadjusted(top: &[ScoredLabel], cache: &LruCache) -> Vec<AdjustedLabel> {
    top.iter()
        .map(|s| {
            let recency_index = cache.recency(&s.label);
            AdjustedLabel {
                label: s.label.clone(),
                score: s.score,
                raw_score: s.score,
                in_cache: recency_index.is_some(),
                recency_index,
                version_transferred: false,
                superseded_by: None,
            }
        })
        .collect()
}
