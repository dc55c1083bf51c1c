//! Engine configuration: a `key = value` text file with `#` comments.
//! Values are layered as defaults, then file, then command-line overrides.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::corpus::SplitSpec;
use crate::error::{Error, Result};
use crate::eval::{StreamOptions, DEFAULT_KS};
use crate::pipeline::PipelineConfig;
use crate::temporal::AdjustmentParams;

#[derive(Clone, Debug, PartialEq)]
pub struct EngineConfig {
    pub pipeline: PipelineConfig,
    pub adjustment: AdjustmentParams,
    pub cache_capacity: usize,
    pub use_adjustment: bool,
    pub prewarm: bool,
    /// Prediction cutoff for `predict` and the triage service.
    pub k: usize,
    pub split: SplitSpec,
    pub dataset: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub model: Option<PathBuf>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        let stream = StreamOptions::default();
        EngineConfig {
            pipeline: PipelineConfig::default(),
            adjustment: stream.params,
            cache_capacity: stream.cache_capacity,
            use_adjustment: true,
            prewarm: true,
            k: *DEFAULT_KS.last().expect("non-empty"),
            split: SplitSpec::default(),
            dataset: None,
            labels: None,
            model: None,
        }
    }
}

pub const KEYS: &[&str] = &[
    "top_word_cut_percent",
    "per_reference_cap",
    "domain_allowlist",
    "description_df_cut",
    "enhance",
    "ngram_max",
    "min_df",
    "sparsity_k",
    "lambda",
    "negatives_per_doc",
    "refine_passes",
    "candidate_cap",
    "seed",
    "cache_capacity",
    "boost_m",
    "top_i",
    "adjust",
    "prewarm",
    "k",
    "split",
    "dataset",
    "labels",
    "model",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "invalid boolean {value:?} for {key}"
        ))),
    }
}

impl EngineConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let p = &mut self.pipeline;
        match key {
            "top_word_cut_percent" => p.enhance.top_word_cut_percent = parse(key, value)?,
            "per_reference_cap" => {
                p.enhance.per_reference_cap = match value {
                    "none" | "inf" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "domain_allowlist" => {
                p.enhance.domain_allowlist = value
                    .split(',')
                    .map(|d| d.trim().to_ascii_lowercase())
                    .filter(|d| !d.is_empty())
                    .collect::<BTreeSet<_>>()
            }
            "description_df_cut" => p.enhance.description_df_cut = parse(key, value)?,
            "enhance" => p.use_enhancement = parse_bool(key, value)?,
            "ngram_max" => p.ngram_max = parse(key, value)?,
            "min_df" => p.min_df = parse(key, value)?,
            "sparsity_k" => p.learner.k = parse(key, value)?,
            "lambda" => p.learner.lambda = parse(key, value)?,
            "negatives_per_doc" => p.learner.negatives_per_doc = parse(key, value)?,
            "refine_passes" => p.learner.refine_passes = parse(key, value)?,
            "candidate_cap" => p.learner.candidate_cap = parse(key, value)?,
            "seed" => p.seed = parse(key, value)?,
            "cache_capacity" => self.cache_capacity = parse(key, value)?,
            "boost_m" => self.adjustment.m = parse(key, value)?,
            "top_i" => self.adjustment.i = parse(key, value)?,
            "adjust" => self.use_adjustment = parse_bool(key, value)?,
            "prewarm" => self.prewarm = parse_bool(key, value)?,
            "k" => self.k = parse(key, value)?,
            "split" => self.split = value.parse()?,
            "dataset" => self.dataset = Some(PathBuf::from(value)),
            "labels" => self.labels = Some(PathBuf::from(value)),
            "model" => self.model = Some(PathBuf::from(value)),
            _ => return Err(Error::Config(format!("unknown configuration key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; blank lines and `#` comments are
    /// skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(key.trim(), value)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text)
    }

    /// Defaults, then `file`, then `overrides` (`key=value` strings).
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut cfg = EngineConfig::default();
        if let Some(f) = file {
            cfg.apply_file(f)?;
        }
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {o:?} is not key=value")))?;
            cfg.set(k.trim(), v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.pipeline.validate()?;
        self.adjustment.validate()?;
        if self.cache_capacity == 0 {
            return Err(Error::Config("cache_capacity must be positive".into()));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        Ok(())
    }

    pub fn stream_options(&self) -> StreamOptions {
        StreamOptions {
            adjustment: self.use_adjustment,
            params: self.adjustment.clone(),
            cache_capacity: self.cache_capacity,
            prewarm: self.prewarm,
            ks: DEFAULT_KS.to_vec(),
        }
    }

    /// The configuration as a file that [`EngineConfig::apply_text`]
    /// reads back to an equal value.
    pub fn to_text(&self) -> String {
        let p = &self.pipeline;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv(
            "top_word_cut_percent",
            format!("{:?}", p.enhance.top_word_cut_percent),
        );
        kv(
            "per_reference_cap",
            p.enhance
                .per_reference_cap
                .map_or("none".into(), |c| c.to_string()),
        );
        kv(
            "domain_allowlist",
            p.enhance
                .domain_allowlist
                .iter()
                .cloned()
                .collect::<Vec<_>>()
                .join(","),
        );
        kv(
            "description_df_cut",
            format!("{:?}", p.enhance.description_df_cut),
        );
        kv("enhance", p.use_enhancement.to_string());
        kv("ngram_max", p.ngram_max.to_string());
        kv("min_df", p.min_df.to_string());
        kv("sparsity_k", p.learner.k.to_string());
        kv("lambda", format!("{:?}", p.learner.lambda));
        kv("negatives_per_doc", p.learner.negatives_per_doc.to_string());
        kv("refine_passes", p.learner.refine_passes.to_string());
        kv("candidate_cap", p.learner.candidate_cap.to_string());
        kv("seed", p.seed.to_string());
        kv("cache_capacity", self.cache_capacity.to_string());
        kv("boost_m", format!("{:?}", self.adjustment.m));
        kv("top_i", self.adjustment.i.to_string());
        kv("adjust", self.use_adjustment.to_string());
        kv("prewarm", self.prewarm.to_string());
        kv("k", self.k.to_string());
        kv("split", self.split.to_string());
        for (k, v) in [
            ("dataset", &self.dataset),
            ("labels", &self.labels),
            ("model", &self.model),
        ] {
            if let Some(v) = v {
                kv(k, v.display().to_string());
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_parameter_table() {
        let c = EngineConfig::default();
        assert_eq!(c.cache_capacity, 300);
        assert_eq!(c.adjustment.m, 8.0);
        assert_eq!(c.adjustment.i, 10);
        assert_eq!(c.pipeline.enhance.top_word_cut_percent, 50.0);
        assert_eq!(c.pipeline.enhance.per_reference_cap, Some(15));
        assert_eq!(c.pipeline.enhance.domain_allowlist.len(), 12);
    }

    #[test]
    fn precedence_flags_over_file_over_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("engine.conf");
        std::fs::write(
            &path,
            "# experiment\nboost_m = 4\ntop_i=5\nseed = 9 # trailing\n",
        )
        .unwrap();
        let c = EngineConfig::load(Some(&path), &["seed=11".into()]).unwrap();
        assert_eq!(c.adjustment.m, 4.0);
        assert_eq!(c.adjustment.i, 5);
        assert_eq!(c.pipeline.seed, 11);
        assert_eq!(c.cache_capacity, 300);
    }

    #[test]
    fn round_trip_text() {
        let mut c = EngineConfig::default();
        c.set("per_reference_cap", "none").unwrap();
        c.set("split", "years:2016:2017").unwrap();
        c.set("model", "out/model").unwrap();
        let mut back = EngineConfig::default();
        back.apply_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn validation_errors() {
        assert!(EngineConfig::load(None, &["top_i=0".into()]).is_err());
        assert!(EngineConfig::load(None, &["cache_capacity=0".into()]).is_err());
        assert!(EngineConfig::load(None, &["nonsense=1".into()]).is_err());
        assert!(EngineConfig::load(None, &["lambda=-1".into()]).is_err());
        let mut c = EngineConfig::default();
        assert!(c.apply_text("no equals sign").is_err());
    }
}
