//! Triage session: a chronological queue of reports, each shown with its
//! ranked suggestions and confirmed by an analyst. Confirmed labels feed
//! the cache; every confirmation is written to the audit log and, when a
//! session file is set, persisted so the session can be replayed.

use std::collections::{BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, LabelId, VulnerabilityReport};
use crate::error::{Error, Result};
use crate::eval::{aggregate, score_report, MetricsReport, ReportScores, DEFAULT_KS};
use crate::pipeline::FittedPipeline;
use crate::temporal::{
    AdjustedLabel, AdjustmentParams, LruCache, VersionStore, DEFAULT_CACHE_CAPACITY,
};

const SESSION_FORMAT: &str = "triage-session v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionOptions {
    pub k: usize,
    pub adjustment: bool,
    pub params: AdjustmentParams,
    pub cache_capacity: usize,
    pub prewarm: bool,
}

impl Default for SessionOptions {
    fn default() -> Self {
        SessionOptions {
            k: 3,
            adjustment: true,
            params: AdjustmentParams::default(),
            cache_capacity: DEFAULT_CACHE_CAPACITY,
            prewarm: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceView {
    pub url: String,
    pub title: Option<String>,
    pub text: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportView {
    pub id: String,
    pub published: NaiveDate,
    pub description: String,
    pub references: Vec<ReferenceView>,
    pub cpe: Vec<String>,
}

impl From<&VulnerabilityReport> for ReportView {
    fn from(r: &VulnerabilityReport) -> Self {
        ReportView {
            id: r.id.clone(),
            published: r.published,
            description: r.description.clone(),
            references: r
                .references
                .iter()
                .map(|d| ReferenceView {
                    url: d.url.clone(),
                    title: d.title.clone(),
                    text: d.text.clone(),
                })
                .collect(),
            cpe: r.cpe_entries.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub report: ReportView,
    pub predictions: Vec<AdjustedLabel>,
    /// Zero-based queue position of the report.
    pub position: usize,
    pub remaining: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub report_id: String,
    pub labels: Vec<LabelId>,
    pub confirmed_at: DateTime<Utc>,
    /// Labels that were added to the universe by this confirmation.
    #[serde(default)]
    pub created: Vec<LabelId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheSummary {
    pub size: usize,
    pub capacity: usize,
    /// Most recent labels first, at most ten.
    pub front: Vec<LabelId>,
}

impl From<&LruCache> for CacheSummary {
    fn from(c: &LruCache) -> Self {
        CacheSummary {
            size: c.len(),
            capacity: c.capacity(),
            front: c.iter().take(10).cloned().collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Confirmation {
    pub report_id: String,
    pub labels: Vec<LabelId>,
    pub cache: CacheSummary,
    pub remaining: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionStats {
    pub confirmed: usize,
    pub remaining: usize,
    /// Running metrics over confirmed reports with at least one label.
    pub metrics: Option<MetricsReport>,
    pub cache: CacheSummary,
    /// Confirmed labels not seen before in training history or earlier in
    /// the session.
    pub unseen_confirmed: usize,
    /// Of those, how many were among the top-k suggestions.
    pub unseen_hits: usize,
}

#[derive(Serialize, Deserialize)]
struct SessionFile {
    format: String,
    initial_cache: LruCache,
    audit: Vec<AuditEntry>,
}

pub struct TriageSession {
    pipeline: FittedPipeline,
    store: VersionStore,
    queue: Vec<VulnerabilityReport>,
    head: usize,
    initial_cache: LruCache,
    cache: LruCache,
    seen: HashSet<LabelId>,
    opts: SessionOptions,
    audit: Vec<AuditEntry>,
    scores: Vec<ReportScores>,
    unseen_confirmed: usize,
    unseen_hits: usize,
    session_file: Option<PathBuf>,
}

impl TriageSession {
    /// A session over `queue` in chronological order. Labels observed in
    /// `history` count as seen and pre-warm the cache when
    /// `opts.prewarm` is set. The queue's label universe is added to the
    /// pipeline so every label in it can be suggested.
    pub fn new(
        mut pipeline: FittedPipeline,
        history: &[&Dataset],
        queue: &Dataset,
        opts: SessionOptions,
    ) -> Result<Self> {
        opts.params.validate()?;
        if opts.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        pipeline.extend_labels(queue.labels.keys());
        let store = VersionStore::build(pipeline.label_set.ids.iter());
        let mut cache = LruCache::new(opts.cache_capacity)?;
        let mut seen = HashSet::new();
        for d in history {
            for r in &d.reports {
                if opts.prewarm {
                    cache.observe(&r.labels);
                }
                seen.extend(r.labels.iter().cloned());
            }
        }
        Ok(TriageSession {
            pipeline,
            store,
            queue: queue.reports.clone(),
            head: 0,
            initial_cache: cache.clone(),
            cache,
            seen,
            opts,
            audit: Vec::new(),
            scores: Vec::new(),
            unseen_confirmed: 0,
            unseen_hits: 0,
            session_file: None,
        })
    }

    /// Persists to `path` after every confirmation. An existing file is
    /// replayed first; it must have been recorded from the same history.
    pub fn attach_session_file(&mut self, path: &Path) -> Result<()> {
        if path.exists() {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let file: SessionFile = serde_json::from_str(&text)?;
            if file.format != SESSION_FORMAT {
                return Err(Error::Validation(format!(
                    "unsupported session format {:?}",
                    file.format
                )));
            }
            if file.initial_cache != self.initial_cache {
                return Err(Error::Validation(
                    "session file was recorded against a different history".into(),
                ));
            }
            self.replay(&file.audit)?;
        }
        self.session_file = Some(path.to_path_buf());
        self.persist()
    }

    /// Applies recorded confirmations in order.
    pub fn replay(&mut self, audit: &[AuditEntry]) -> Result<()> {
        for e in audit {
            let labels: Vec<String> = e.labels.iter().map(|l| l.as_str().to_string()).collect();
            self.confirm_at(&e.report_id, &labels, !e.created.is_empty(), e.confirmed_at)?;
        }
        Ok(())
    }

    pub fn pipeline(&self) -> &FittedPipeline {
        &self.pipeline
    }

    pub fn cache(&self) -> &LruCache {
        &self.cache
    }

    pub fn audit(&self) -> &[AuditEntry] {
        &self.audit
    }

    pub fn remaining(&self) -> usize {
        self.queue.len() - self.head
    }

    fn predictions(&self, report: &VulnerabilityReport, k: usize) -> Result<Vec<AdjustedLabel>> {
        let temporal =
            self.opts
                .adjustment
                .then_some((&self.store, &self.cache, &self.opts.params));
        self.pipeline.predict(report, temporal, k)
    }

    /// The report at the head of the queue with its suggestions, or `None`
    /// once every report is confirmed.
    pub fn next(&self) -> Result<Option<Suggestion>> {
        let Some(report) = self.queue.get(self.head) else {
            return Ok(None);
        };
        Ok(Some(Suggestion {
            report: report.into(),
            predictions: self.predictions(report, self.opts.k)?,
            position: self.head,
            remaining: self.remaining(),
        }))
    }

    pub fn confirm(
        &mut self,
        report_id: &str,
        labels: &[String],
        create: bool,
    ) -> Result<Confirmation> {
        self.confirm_at(report_id, labels, create, Utc::now())
    }

    fn confirm_at(
        &mut self,
        report_id: &str,
        labels: &[String],
        create: bool,
        at: DateTime<Utc>,
    ) -> Result<Confirmation> {
        if self.audit.iter().any(|e| e.report_id == report_id) {
            return Err(Error::AlreadyConfirmed(report_id.to_string()));
        }
        match self.queue.get(self.head) {
            Some(r) if r.id == report_id => {}
            _ if self.queue.iter().any(|r| r.id == report_id) => {
                return Err(Error::OutOfOrder(report_id.to_string()))
            }
            _ => return Err(Error::UnknownReport(report_id.to_string())),
        }
        let labels: BTreeSet<LabelId> = labels
            .iter()
            .map(|l| LabelId::parse(l))
            .collect::<Result<_>>()?;
        let unknown: Vec<LabelId> = labels
            .iter()
            .filter(|l| self.pipeline.label_set.position(l).is_none())
            .cloned()
            .collect();
        if !unknown.is_empty() {
            if !create {
                return Err(Error::UnknownLabel(unknown[0].as_str().to_string()));
            }
            self.pipeline.extend_labels(unknown.iter());
            self.store = VersionStore::build(self.pipeline.label_set.ids.iter());
        }

        let report = &self.queue[self.head];
        let k_max = self
            .opts
            .k
            .max(*DEFAULT_KS.iter().max().expect("non-empty"));
        let predicted: Vec<LabelId> = self
            .predictions(report, k_max)?
            .into_iter()
            .map(|a| a.label)
            .collect();
        if let Some(s) = score_report(&predicted, &labels, &DEFAULT_KS) {
            self.scores.push(s);
        }
        let top_k = &predicted[..self.opts.k.min(predicted.len())];
        for l in &labels {
            if !self.seen.contains(l) {
                self.unseen_confirmed += 1;
                if top_k.contains(l) {
                    self.unseen_hits += 1;
                }
            }
        }
        self.seen.extend(labels.iter().cloned());
        self.cache.observe(&labels);
        let labels: Vec<LabelId> = labels.into_iter().collect();
        self.audit.push(AuditEntry {
            report_id: report_id.to_string(),
            labels: labels.clone(),
            confirmed_at: at,
            created: unknown,
        });
        self.head += 1;
        self.persist()?;
        Ok(Confirmation {
            report_id: report_id.to_string(),
            labels,
            cache: (&self.cache).into(),
            remaining: self.remaining(),
        })
    }

    fn persist(&self) -> Result<()> {
        let Some(path) = &self.session_file else {
            return Ok(());
        };
        let file = SessionFile {
            format: SESSION_FORMAT.into(),
            initial_cache: self.initial_cache.clone(),
            audit: self.audit.clone(),
        };
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, serde_json::to_string_pretty(&file)?)
            .map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn stats(&self) -> SessionStats {
        SessionStats {
            confirmed: self.head,
            remaining: self.remaining(),
            metrics: aggregate(&self.scores, &DEFAULT_KS).ok(),
            cache: (&self.cache).into(),
            unseen_confirmed: self.unseen_confirmed,
            unseen_hits: self.unseen_hits,
        }
    }

    /// Labels whose id contains `query` (case-insensitive); ids starting
    /// with it come first.
    pub fn search(&self, query: &str, limit: usize) -> Vec<LabelId> {
        let q = query.trim().to_lowercase();
        if q.is_empty() {
            return Vec::new();
        }
        let (mut prefix, mut inner) = (Vec::new(), Vec::new());
        for id in &self.pipeline.label_set.ids {
            let s = id.as_str().to_lowercase();
            if s.starts_with(&q) {
                prefix.push(id.clone());
            } else if s.contains(&q) {
                inner.push(id.clone());
            }
        }
        prefix.extend(inner);
        prefix.truncate(limit);
        prefix
    }
}
