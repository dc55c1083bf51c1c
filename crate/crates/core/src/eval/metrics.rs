use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::LabelId;
use crate::error::{Error, Result};

pub const DEFAULT_KS: [usize; 3] = [1, 2, 3];

/// `P = |top-k ∩ truth| / k` and `R = |top-k ∩ truth| / |truth|`. The
/// precision denominator stays `k` even when fewer than `k` labels were
/// predicted. Returns `None` for an empty truth set.
pub fn precision_recall_at_k(
    predicted: &[LabelId],
    truth: &BTreeSet<LabelId>,
    k: usize,
) -> Option<(f64, f64)> {
    if truth.is_empty() || k == 0 {
        return None;
    }
    let mut seen = BTreeSet::new();
    let hits = predicted
        .iter()
        .take(k)
        .filter(|l| seen.insert(*l) && truth.contains(*l))
        .count() as f64;
    Some((hits / k as f64, hits / truth.len() as f64))
}

/// Per-report precision and recall, one entry per cutoff.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportScores {
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
}

pub fn score_report(
    predicted: &[LabelId],
    truth: &BTreeSet<LabelId>,
    ks: &[usize],
) -> Option<ReportScores> {
    let mut precision = Vec::with_capacity(ks.len());
    let mut recall = Vec::with_capacity(ks.len());
    for &k in ks {
        let (p, r) = precision_recall_at_k(predicted, truth, k)?;
        precision.push(p);
        recall.push(r);
    }
    Some(ReportScores { precision, recall })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtK {
    pub k: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    pub at_k: Vec<AtK>,
    pub avg_f1: f64,
}

pub fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Averages precision and recall over reports, then takes the harmonic
/// mean of the averages.
pub fn aggregate(per_report: &[ReportScores], ks: &[usize]) -> Result<MetricsReport> {
    if per_report.is_empty() {
        return Err(Error::Empty("evaluated report set"));
    }
    let n = per_report.len();
    let mut at_k = Vec::with_capacity(ks.len());
    for (j, &k) in ks.iter().enumerate() {
        let p = per_report.iter().map(|s| s.precision[j]).sum::<f64>() / n as f64;
        let r = per_report.iter().map(|s| s.recall[j]).sum::<f64>() / n as f64;
        at_k.push(AtK {
            k,
            precision: p,
            recall: r,
            f1: harmonic(p, r),
        });
    }
    let avg_f1 = at_k.iter().map(|a| a.f1).sum::<f64>() / at_k.len() as f64;
    Ok(MetricsReport { n, at_k, avg_f1 })
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n\t{}", self.n);
        let _ = writeln!(out, "k\tP@k\tR@k\tF1@k");
        for a in &self.at_k {
            let _ = writeln!(
                out,
                "{}\t{:.4}\t{:.4}\t{:.4}",
                a.k, a.precision, a.recall, a.f1
            );
        }
        let _ = writeln!(out, "avg_F1\t{:.4}", self.avg_f1);
        out
    }
}
