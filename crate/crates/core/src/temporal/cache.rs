use std::collections::{BTreeSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::LabelId;
use crate::error::{Error, Result};

/// Recently confirmed labels under least-recently-used replacement. The
/// front of the list has recency index 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CacheSnapshot", into = "CacheSnapshot")]
pub struct LruCache {
    capacity: usize,
    order: VecDeque<LabelId>,
}

#[derive(Serialize, Deserialize)]
struct CacheSnapshot {
    capacity: usize,
    labels: Vec<LabelId>,
}

impl TryFrom<CacheSnapshot> for LruCache {
    type Error = Error;

    fn try_from(s: CacheSnapshot) -> Result<Self> {
        let unique: BTreeSet<&LabelId> = s.labels.iter().collect();
        if s.capacity == 0 || s.labels.len() > s.capacity || unique.len() != s.labels.len() {
            return Err(Error::Validation(
                "cache snapshot violates capacity or uniqueness".into(),
            ));
        }
        Ok(LruCache {
            capacity: s.capacity,
            order: s.labels.into(),
        })
    }
}

impl From<LruCache> for CacheSnapshot {
    fn from(c: LruCache) -> Self {
        CacheSnapshot {
            capacity: c.capacity,
            labels: c.order.into(),
        }
    }
}

impl LruCache {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("cache capacity must be positive".into()));
        }
        Ok(LruCache {
            capacity,
            order: VecDeque::with_capacity(capacity),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn contains(&self, label: &LabelId) -> bool {
        self.order.contains(label)
    }

    /// 0 for the most recent label, `len - 1` for the least recent.
    pub fn recency(&self, label: &LabelId) -> Option<usize> {
        self.order.iter().position(|l| l == label)
    }

    /// Most recent first.
    pub fn iter(&self) -> impl Iterator<Item = &LabelId> {
        self.order.iter()
    }

    /// Moves or inserts `label` to the front, returning the evicted label
    /// if the capacity was exceeded.
    pub fn insert(&mut self, label: LabelId) -> Option<LabelId> {
        if let Some(pos) = self.recency(&label) {
            let l = self.order.remove(pos).expect("position is in range");
            self.order.push_front(l);
            return None;
        }
        self.order.push_front(label);
        if self.order.len() > self.capacity {
            self.order.pop_back()
        } else {
            None
        }
    }

    /// Inserts a report's ground-truth labels: version-qualified labels
    /// first, then bare library names, lexicographic within each group.
    pub fn observe<'a>(&mut self, labels: impl IntoIterator<Item = &'a LabelId>) {
        for l in ground_truth_order(labels) {
            self.insert(l.clone());
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn ground_truth_order<'a>(labels: impl IntoIterator<Item = &'a LabelId>) -> Vec<&'a LabelId> {
    let mut v: Vec<&LabelId> = labels.into_iter().collect();
    v.sort_by(|a, b| {
        b.version()
            .is_some()
            .cmp(&a.version().is_some())
            .then_with(|| a.cmp(b))
    });
    v.dedup();
    v
}
