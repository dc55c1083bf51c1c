use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::corpus::LabelId;
use crate::error::{Error, Result};

fn is_numeric(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

fn cmp_numeric(a: &str, b: &str) -> Ordering {
    let a = a.trim_start_matches('0');
    let b = b.trim_start_matches('0');
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

/// Compares dotted version strings component-wise: numerically when both
/// components are digits, lexicographically otherwise. The shorter side is
/// padded with `0`.
pub fn compare_version_strings(a: &str, b: &str) -> Ordering {
    let left: Vec<&str> = a.split('.').collect();
    let right: Vec<&str> = b.split('.').collect();
    let n = left.len().max(right.len());
    for i in 0..n {
        let x = left.get(i).copied().unwrap_or("0");
        let y = right.get(i).copied().unwrap_or("0");
        let ord = if is_numeric(x) && is_numeric(y) {
            cmp_numeric(x, y)
        } else {
            x.cmp(y)
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    Ordering::Equal
}

/// Orders two labels of the same library by version. An unversioned label
/// is older than any versioned sibling.
pub fn parse_and_compare_versions(a: &LabelId, b: &LabelId) -> Result<Ordering> {
    if a.name() != b.name() {
        return Err(Error::BaseNameMismatch(a.to_string(), b.to_string()));
    }
    Ok(match (a.version(), b.version()) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (Some(x), Some(y)) => compare_version_strings(x, y),
    })
}

/// For each label, the strictly newer versions of the same library,
/// newest first.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VersionStore {
    newer: BTreeMap<LabelId, Vec<LabelId>>,
}

impl VersionStore {
    /// Builds the store from a label universe. Versions that compare equal
    /// (`2.0` and `2.0.0`) collapse to the lexicographically smallest id.
    pub fn build<'a>(labels: impl IntoIterator<Item = &'a LabelId>) -> Self {
        let mut by_name: BTreeMap<&str, Vec<&LabelId>> = BTreeMap::new();
        for l in labels {
            by_name.entry(l.name()).or_default().push(l);
        }
        let mut newer = BTreeMap::new();
        for siblings in by_name.values_mut() {
            if siblings.len() < 2 {
                continue;
            }
            // Newest first; ties by id keep the collapse deterministic.
            siblings.sort_by(|a, b| {
                parse_and_compare_versions(b, a)
                    .expect("siblings share a name")
                    .then_with(|| a.cmp(b))
            });
            let mut distinct: Vec<&LabelId> = siblings.clone();
            distinct.dedup_by(|later, earlier| {
                parse_and_compare_versions(later, earlier).ok() == Some(Ordering::Equal)
            });
            for l in siblings.iter() {
                let list: Vec<LabelId> = distinct
                    .iter()
                    .filter(|n| parse_and_compare_versions(n, l).ok() == Some(Ordering::Greater))
                    .map(|n| (*n).clone())
                    .collect();
                if !list.is_empty() {
                    newer.insert((*l).clone(), list);
                }
            }
        }
        VersionStore { newer }
    }

    /// Newer versions of `label`, newest first.
    pub fn newer(&self, label: &LabelId) -> &[LabelId] {
        self.newer.get(label).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.newer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.newer.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LabelId, &[LabelId])> {
        self.newer.iter().map(|(k, v)| (k, v.as_slice()))
    }
}
