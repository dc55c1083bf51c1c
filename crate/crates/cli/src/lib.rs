//! The `vulnlabel` command line and triage HTTP service.

pub mod server;

use std::io::Write as _;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use vulnlabel_core::config::EngineConfig;
use vulnlabel_core::corpus::{
    chronological_split, load_dataset_with_labels, unseen_census, write_dataset,
    write_label_universe, ChronologicalSplit, Granularity, LoadMode,
};
use vulnlabel_core::enhance::Enhancer;
use vulnlabel_core::eval::{
    baseline_cpe, evaluate_rankings, evaluate_stream, timing_profile, ExactMatcher, IrBaseline,
    MetricsReport, DEFAULT_KS,
};
use vulnlabel_core::pipeline::{label_texts, FittedPipeline};
use vulnlabel_core::service::{SessionOptions, TriageSession};
use vulnlabel_core::synthetic::{generate, SyntheticConfig};
use vulnlabel_core::temporal::{AdjustedLabel, LruCache, VersionStore};
use vulnlabel_core::{Dataset, Error};

#[derive(Debug, Parser)]
#[command(
    name = "vulnlabel",
    version,
    about = "Identify affected libraries in vulnerability reports"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Engine configuration file (`key = value` lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Configuration override, repeatable; wins over the file.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Report dataset (JSON Lines).
    #[arg(long, global = true)]
    pub dataset: Option<PathBuf>,
    /// Label-universe file, one id per line.
    #[arg(long, global = true)]
    pub labels: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Prediction cutoff.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Use the raw description and plain label names.
    #[arg(long, global = true)]
    pub no_enhance: bool,
    /// Rank by model score only.
    #[arg(long, global = true)]
    pub no_adjust: bool,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a raw dataset and write it in canonical form.
    Ingest {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        labels_out: Option<PathBuf>,
        /// Accept reports without ground-truth labels.
        #[arg(long)]
        unlabeled: bool,
    },
    /// Write the chronological train/validation/test split.
    Split {
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Count seen and unseen labels per split or per year.
    Census {
        #[arg(long)]
        by_year: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write enhanced description text for every report.
    Enhance {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the pipeline on the training split and save it.
    Train {
        #[arg(long)]
        model_out: PathBuf,
    },
    /// Predict labels for every report in the dataset.
    Predict {
        #[arg(long)]
        model: Option<PathBuf>,
        /// Cache snapshot to rank against; empty when absent.
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stream the test split chronologically and report P/R/F1@k.
    Evaluate {
        /// Use a saved model instead of training.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Directory for metrics.json, metrics.txt and predictions.jsonl.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Score a comparison method on the test split.
    Baseline {
        #[arg(long, value_enum)]
        method: BaselineMethod,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Training and inference time on growing chronological prefixes.
    Timing {
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75,1.0")]
        fractions: Vec<f64>,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the test split as a triage queue over HTTP.
    Serve {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Persist confirmations here; an existing file is replayed.
        #[arg(long)]
        session_file: Option<PathBuf>,
    },
    /// Write a seeded synthetic corpus.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 300)]
        reports: usize,
        #[arg(long, default_value_t = 7)]
        corpus_seed: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BaselineMethod {
    /// Library names found in description and allowlisted references.
    Exact,
    /// Library names found in the description only.
    ExactDescription,
    /// Vendor and product fields of CPE entries.
    Cpe,
    /// Cosine retrieval between report and label texts.
    Ir,
}

/// Process exit status for an error: 3 for i/o, 4 for configuration, 5
/// for bad input data, 1 otherwise. Usage errors exit with 2 from the
/// argument parser.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Io { .. } => 3,
                Error::Config(_) => 4,
                Error::Parse { .. }
                | Error::Validation(_)
                | Error::Json(_)
                | Error::Empty(_)
                | Error::BaseNameMismatch(..)
                | Error::ModelMismatch(_)
                | Error::DimensionMismatch { .. }
                | Error::NonFinite { .. }
                | Error::UnknownReport(_)
                | Error::AlreadyConfirmed(_)
                | Error::OutOfOrder(_)
                | Error::UnknownLabel(_) => 5,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 3;
        }
    }
    1
}

fn engine_config(g: &GlobalArgs) -> vulnlabel_core::Result<EngineConfig> {
    let mut overrides = g.overrides.clone();
    let mut flag = |k: &str, v: String| overrides.push(format!("{k}={v}"));
    if let Some(p) = &g.dataset {
        flag("dataset", p.display().to_string());
    }
    if let Some(p) = &g.labels {
        flag("labels", p.display().to_string());
    }
    if let Some(s) = g.seed {
        flag("seed", s.to_string());
    }
    if let Some(k) = g.k {
        flag("k", k.to_string());
    }
    if g.no_enhance {
        flag("enhance", "false".into());
    }
    if g.no_adjust {
        flag("adjust", "false".into());
    }
    EngineConfig::load(g.config.as_deref(), &overrides)
}

fn load(cfg: &EngineConfig, mode: LoadMode) -> vulnlabel_core::Result<Dataset> {
    let path = cfg
        .dataset
        .as_deref()
        .ok_or_else(|| Error::Config("no dataset given (--dataset)".into()))?;
    load_dataset_with_labels(path, cfg.labels.as_deref(), mode)
}

fn split(cfg: &EngineConfig) -> vulnlabel_core::Result<ChronologicalSplit> {
    chronological_split(&load(cfg, LoadMode::Labeled)?, cfg.split)
}

fn model_dir<'a>(
    arg: &'a Option<PathBuf>,
    cfg: &'a EngineConfig,
) -> vulnlabel_core::Result<&'a Path> {
    arg.as_deref()
        .or(cfg.model.as_deref())
        .ok_or_else(|| Error::Config("no model directory given (--model)".into()))
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        })?,
        None => match std::io::stdout().write_all(text.as_bytes()) {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
            r => r?,
        },
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    emit(Some(path), text)
}

fn create_dir(path: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

#[derive(Serialize)]
struct PredictionLine<'a> {
    id: &'a str,
    predictions: &'a [AdjustedLabel],
}

fn json_line<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string(v).expect("serializable");
    s.push('\n');
    s
}

fn metrics_output(m: &MetricsReport, out: Option<&Path>) -> anyhow::Result<()> {
    print!("{}", m.to_table());
    if let Some(p) = out {
        write_file(p, &m.to_json())?;
    }
    Ok(())
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = engine_config(&cli.global)?;
    match cli.command {
        Command::Ingest {
            out,
            labels_out,
            unlabeled,
        } => {
            let mode = if unlabeled {
                LoadMode::Unlabeled
            } else {
                LoadMode::Labeled
            };
            let d = load(&cfg, mode)?;
            write_dataset(&d, &out)?;
            if let Some(p) = labels_out {
                write_label_universe(&d, &p)?;
            }
            println!("{} reports, {} labels", d.len(), d.labels.len());
        }
        Command::Split { out_dir } => {
            let s = split(&cfg)?;
            create_dir(&out_dir)?;
            for (name, part) in s.parts() {
                write_dataset(part, &out_dir.join(format!("{name}.jsonl")))?;
                println!("{name}\t{}", part.len());
            }
            write_label_universe(&s.train, &out_dir.join("labels.txt"))?;
        }
        Command::Census { by_year, out } => {
            let g = if by_year {
                Granularity::PerYear
            } else {
                Granularity::PerSplit
            };
            let c = unseen_census(&split(&cfg)?, g);
            print!("{}", c.to_table());
            if let Some(p) = out {
                write_file(&p, &serde_json::to_string_pretty(&c)?)?;
            }
        }
        Command::Enhance { out } => {
            let d = load(&cfg, LoadMode::Unlabeled)?;
            let s = chronological_split(&d, cfg.split)?;
            let e = Enhancer::fit(
                &s.train,
                cfg.pipeline.enhance.clone(),
                cfg.pipeline.use_enhancement,
            );
            let text: String = d
                .reports
                .iter()
                .map(|r| json_line(&serde_json::json!({ "id": r.id, "text": e.enhance(r).0 })))
                .collect();
            emit(out.as_deref(), &text)?;
        }
        Command::Train { model_out } => {
            let s = split(&cfg)?;
            let p = FittedPipeline::fit(&s.train, &cfg.pipeline)?;
            p.save(&model_out)?;
            write_file(&model_out.join("engine.conf"), &cfg.to_text())?;
            println!(
                "trained on {} reports, {} labels; model written to {}",
                s.train.len(),
                p.labels.len(),
                model_out.display()
            );
        }
        Command::Predict { model, cache, out } => {
            let mut p = FittedPipeline::load(model_dir(&model, &cfg)?)?;
            let d = load(&cfg, LoadMode::Unlabeled)?;
            p.extend_labels(d.labels.keys());
            let cache = match cache {
                Some(c) => LruCache::load(&c)?,
                None => LruCache::new(cfg.cache_capacity)?,
            };
            let store = VersionStore::build(p.label_set.ids.iter());
            let temporal = cfg
                .use_adjustment
                .then_some((&store, &cache, &cfg.adjustment));
            let mut text = String::new();
            for r in &d.reports {
                let ranked = p.predict(r, temporal, cfg.k)?;
                text.push_str(&json_line(&PredictionLine {
                    id: &r.id,
                    predictions: &ranked,
                }));
            }
            emit(out.as_deref(), &text)?;
        }
        Command::Evaluate { model, out_dir } => {
            let s = split(&cfg)?;
            let mut p = match model.as_deref().or(cfg.model.as_deref()) {
                Some(dir) => FittedPipeline::load(dir)?,
                None => FittedPipeline::fit(&s.train, &cfg.pipeline)?,
            };
            p.extend_labels(s.test.labels.keys());
            let o = evaluate_stream(
                &p,
                &[&s.train, &s.validation],
                &s.test,
                &cfg.stream_options(),
            )?;
            print!("{}", o.metrics.to_table());
            if let Some(dir) = out_dir {
                create_dir(&dir)?;
                write_file(&dir.join("metrics.json"), &o.metrics.to_json())?;
                write_file(&dir.join("metrics.txt"), &o.metrics.to_table())?;
                let preds: String = o
                    .predictions
                    .iter()
                    .map(|r| {
                        json_line(&PredictionLine {
                            id: &r.id,
                            predictions: &r.ranked,
                        })
                    })
                    .collect();
                write_file(&dir.join("predictions.jsonl"), &preds)?;
            }
        }
        Command::Baseline { method, out } => {
            let s = split(&cfg)?;
            let k_max = *DEFAULT_KS.iter().max().expect("non-empty");
            let ecfg = &cfg.pipeline.enhance;
            let top =
                |v: Vec<(vulnlabel_core::LabelId, f64)>| v.into_iter().map(|(l, _)| l).collect();
            let m = match method {
                BaselineMethod::Exact | BaselineMethod::ExactDescription => {
                    let matcher =
                        ExactMatcher::new(s.test.labels.keys(), method == BaselineMethod::Exact);
                    evaluate_rankings(&s.test, &DEFAULT_KS, |r| {
                        top(matcher.predict(r, ecfg, k_max))
                    })?
                }
                BaselineMethod::Cpe => evaluate_rankings(&s.test, &DEFAULT_KS, baseline_cpe)?,
                BaselineMethod::Ir => {
                    let e = Enhancer::fit(&s.train, ecfg.clone(), cfg.pipeline.use_enhancement);
                    let docs: Vec<String> =
                        s.train.reports.iter().map(|r| e.enhance(r).0).collect();
                    let labels = label_texts(&s.train, cfg.pipeline.use_enhancement);
                    let ir = IrBaseline::fit(&docs, &labels, ecfg, cfg.pipeline.ngram_max)?;
                    evaluate_rankings(&s.test, &DEFAULT_KS, |r| top(ir.predict(r, &e, k_max)))?
                }
            };
            metrics_output(&m, out.as_deref())?;
        }
        Command::Timing {
            fractions,
            repeats,
            out,
        } => {
            let s = split(&cfg)?;
            let t = timing_profile(&s.train, &s.test, &cfg.pipeline, &fractions, repeats)?;
            emit(out.as_deref(), &t.to_csv())?;
        }
        Command::Serve {
            model,
            host,
            port,
            session_file,
        } => {
            let s = split(&cfg)?;
            let p = FittedPipeline::load(model_dir(&model, &cfg)?)?;
            let opts = SessionOptions {
                k: cfg.k,
                adjustment: cfg.use_adjustment,
                params: cfg.adjustment.clone(),
                cache_capacity: cfg.cache_capacity,
                prewarm: cfg.prewarm,
            };
            let mut session = TriageSession::new(p, &[&s.train, &s.validation], &s.test, opts)?;
            if let Some(f) = session_file {
                session.attach_session_file(&f)?;
            }
            if !host.is_loopback() {
                log::warn!("binding to non-loopback address {host}");
            }
            let rt = tokio::runtime::Runtime::new().context("starting runtime")?;
            rt.block_on(server::serve(session, SocketAddr::new(host, port)))?;
        }
        Command::Synth {
            out,
            reports,
            corpus_seed,
        } => {
            let d = generate(&SyntheticConfig {
                n_reports: reports,
                seed: corpus_seed,
                ..Default::default()
            })?;
            write_dataset(&d, &out)?;
            println!("{} reports, {} labels", d.len(), d.labels.len());
        }
    }
    Ok(())
}

/// The error chain joined with `: `, skipping causes already spelled out
/// by the message before them.
fn describe(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let msg = cause.to_string();
        if !out.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

/// Parses `args` and runs, returning the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            exit_code(&e)
        }
    }
}
