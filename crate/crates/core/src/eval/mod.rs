//! Metrics, baselines, chronological streaming evaluation and timing.

mod baselines;
mod metrics;

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use baselines::{baseline_cpe, ExactMatcher, IrBaseline};
pub use metrics::{
    aggregate, harmonic, precision_recall_at_k, score_report, AtK, MetricsReport, ReportScores,
    DEFAULT_KS,
};

use crate::corpus::{Dataset, LabelId, VulnerabilityReport};
use crate::error::{Error, Result};
use crate::pipeline::{FittedPipeline, PipelineConfig};
use crate::temporal::{
    AdjustedLabel, AdjustmentParams, LruCache, VersionStore, DEFAULT_CACHE_CAPACITY,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamOptions {
    pub adjustment: bool,
    pub params: AdjustmentParams,
    pub cache_capacity: usize,
    /// Feed the ground truth of earlier reports into the cache before the
    /// stream starts.
    pub prewarm: bool,
    pub ks: Vec<usize>,
}

impl Default for StreamOptions {
    fn default() -> Self {
        StreamOptions {
            adjustment: true,
            params: AdjustmentParams::default(),
            cache_capacity: DEFAULT_CACHE_CAPACITY,
            prewarm: true,
            ks: DEFAULT_KS.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportPrediction {
    pub id: String,
    pub ranked: Vec<AdjustedLabel>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StreamOutcome {
    pub metrics: MetricsReport,
    pub predictions: Vec<ReportPrediction>,
    pub cache: LruCache,
}

const CHUNK: usize = 256;

/// Streams `test` in chronological order. Each report is predicted from
/// the current cache, scored against its ground truth, and then its
/// ground truth enters the cache. `history` (typically train and
/// validation) pre-warms the cache when `opts.prewarm` is set. Reports
/// without labels are predicted but not scored.
pub fn evaluate_stream(
    pipeline: &FittedPipeline,
    history: &[&Dataset],
    test: &Dataset,
    opts: &StreamOptions,
) -> Result<StreamOutcome> {
    opts.params.validate()?;
    let k_max = *opts.ks.iter().max().ok_or(Error::Empty("cutoff list"))?;
    let store = VersionStore::build(pipeline.label_set.ids.iter());
    let mut cache = LruCache::new(opts.cache_capacity)?;
    if opts.prewarm {
        for d in history {
            for r in &d.reports {
                cache.observe(&r.labels);
            }
        }
    }
    let mut per_report = Vec::new();
    let mut predictions = Vec::with_capacity(test.len());
    let mut skipped = 0usize;
    for chunk in test.reports.chunks(CHUNK) {
        let scores: Vec<Vec<f64>> = chunk
            .par_iter()
            .map(|r| pipeline.score_all(r))
            .collect::<Result<_>>()?;
        for (report, scores) in chunk.iter().zip(scores) {
            let temporal = opts.adjustment.then_some((&store, &cache, &opts.params));
            let ranked = pipeline.rank(&scores, temporal, k_max);
            let labels: Vec<LabelId> = ranked.iter().map(|a| a.label.clone()).collect();
            match score_report(&labels, &report.labels, &opts.ks) {
                Some(s) => per_report.push(s),
                None => skipped += 1,
            }
            cache.observe(&report.labels);
            predictions.push(ReportPrediction {
                id: report.id.clone(),
                ranked,
            });
        }
    }
    if skipped > 0 {
        log::warn!("{skipped} reports without ground truth were not scored");
    }
    Ok(StreamOutcome {
        metrics: aggregate(&per_report, &opts.ks)?,
        predictions,
        cache,
    })
}

/// Scores a fixed ranking function over `test`; reports without labels
/// are skipped.
pub fn evaluate_rankings<F>(test: &Dataset, ks: &[usize], predict: F) -> Result<MetricsReport>
where
    F: Fn(&VulnerabilityReport) -> Vec<LabelId> + Sync,
{
    let per_report: Vec<ReportScores> = test
        .reports
        .par_iter()
        .filter_map(|r| score_report(&predict(r), &r.labels, ks))
        .collect();
    aggregate(&per_report, ks)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub fraction: f64,
    pub train_reports: usize,
    pub test_reports: usize,
    pub train_ms: f64,
    pub inference_ms: f64,
}

impl TimingRow {
    pub fn train_ms_per_report(&self) -> f64 {
        self.train_ms / self.train_reports as f64
    }

    pub fn inference_ms_per_report(&self) -> f64 {
        self.inference_ms / self.test_reports as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingProfile {
    pub rows: Vec<TimingRow>,
    pub train_r2: f64,
    pub inference_r2: f64,
}

/// Coefficient of determination of the least-squares line through the
/// points. Constant `ys` give 1.
pub fn linear_r2(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 1.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if syy == 0.0 {
        return 1.0;
    }
    if sxx == 0.0 {
        return 0.0;
    }
    let slope = sxy / sxx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (my + slope * (x - mx))).powi(2))
        .sum();
    1.0 - ss_res / syy
}

fn prefix(d: &Dataset, fraction: f64) -> Dataset {
    let n = ((d.len() as f64 * fraction).ceil() as usize).clamp(1, d.len().max(1));
    d.with_reports(d.reports[..n.min(d.len())].to_vec())
}

/// Wall-clock training and inference totals on chronological prefixes of
/// `train` and `test`, averaged over `repeats`. Inference includes the
/// temporal adjustment.
pub fn timing_profile(
    train: &Dataset,
    test: &Dataset,
    config: &PipelineConfig,
    fractions: &[f64],
    repeats: usize,
) -> Result<TimingProfile> {
    if fractions.is_empty() || repeats == 0 {
        return Err(Error::Config(
            "timing needs at least one fraction and one repeat".into(),
        ));
    }
    if let Some(f) = fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
        return Err(Error::Config(format!(
            "fraction must lie in (0, 1], got {f}"
        )));
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::Empty("timing split"));
    }
    let opts = StreamOptions::default();
    let mut rows = Vec::new();
    for &fraction in fractions {
        let tr = prefix(train, fraction);
        let te = prefix(test, fraction);
        let (mut train_ms, mut inference_ms) = (0.0, 0.0);
        for _ in 0..repeats {
            let t0 = Instant::now();
            let pipeline = FittedPipeline::fit(&tr, config)?;
            train_ms += t0.elapsed().as_secs_f64() * 1e3;
            let t1 = Instant::now();
            evaluate_stream(&pipeline, &[&tr], &te, &opts)?;
            inference_ms += t1.elapsed().as_secs_f64() * 1e3;
        }
        rows.push(TimingRow {
            fraction,
            train_reports: tr.len(),
            test_reports: te.len(),
            train_ms: train_ms / repeats as f64,
            inference_ms: inference_ms / repeats as f64,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.fraction).collect();
    let train_r2 = linear_r2(&xs, &rows.iter().map(|r| r.train_ms).collect::<Vec<_>>());
    let inference_r2 = linear_r2(
        &xs,
        &rows.iter().map(|r| r.inference_ms).collect::<Vec<_>>(),
    );
    Ok(TimingProfile {
        rows,
        train_r2,
        inference_r2,
    })
}

impl TimingProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "fraction,train_reports,test_reports,train_ms,inference_ms,train_ms_per_report,inference_ms_per_report\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{:.3},{:.3},{:.4},{:.4}",
                r.fraction,
                r.train_reports,
                r.test_reports,
                r.train_ms,
                r.inference_ms,
                r.train_ms_per_report(),
                r.inference_ms_per_report()
            );
        }
        let _ = writeln!(
            out,
            "# r2 train={:.4} inference={:.4}",
            self.train_r2, self.inference_r2
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r2_of_a_line_is_one() {
        let xs = [0.25, 0.5, 0.75, 1.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x + 1.0).collect();
        assert!((linear_r2(&xs, &ys) - 1.0).abs() < 1e-12);
        let noisy = [1.0, 3.0, 2.0, 4.0];
        let r2 = linear_r2(&xs, &noisy);
        assert!(r2 > 0.0 && r2 < 1.0);
    }

    #[test]
    fn zero_fraction_rejected() {
        let d = Dataset::default();
        let err = timing_profile(&d, &d, &PipelineConfig::default(), &[0.0], 1);
        assert!(matches!(err, Err(Error::Config(_))));
    }
}
