//! Runs the four enhancement/adjustment combinations on the synthetic
//! corpus and prints avg F1 for each. Optional arguments: corpus seed,
//! lambda, negatives per document, K.

use std::time::Instant;

use vulnlabel_core::corpus::{chronological_split, SplitSpec};
use vulnlabel_core::eval::{evaluate_stream, StreamOptions};
use vulnlabel_core::pipeline::{FittedPipeline, PipelineConfig};
use vulnlabel_core::synthetic::{generate, SyntheticConfig};

fn arg<T: std::str::FromStr>(i: usize) -> Option<T> {
    std::env::args().nth(i).and_then(|s| s.parse().ok())
}

fn main() -> vulnlabel_core::Result<()> {
    let seed: u64 = arg(1).unwrap_or(7);
    let mut cfg = PipelineConfig::default();
    if let Some(l) = arg(2) {
        cfg.learner.lambda = l;
    }
    if let Some(n) = arg(3) {
        cfg.learner.negatives_per_doc = n;
    }
    if let Some(k) = arg(4) {
        cfg.learner.k = k;
    }
    let data = generate(&SyntheticConfig {
        seed,
        ..SyntheticConfig::default()
    })?;
    let split = chronological_split(&data, SplitSpec::default())?;
    for enhance in [true, false] {
        let t = Instant::now();
        let cfg = PipelineConfig {
            use_enhancement: enhance,
            ..cfg.clone()
        };
        let p = FittedPipeline::fit(&split.train, &cfg)?;
        let fit = evaluate_stream(
            &p,
            &[],
            &split.train,
            &StreamOptions {
                adjustment: false,
                ..StreamOptions::default()
            },
        )?;
        for adjustment in [true, false] {
            let opts = StreamOptions {
                adjustment,
                ..StreamOptions::default()
            };
            let out = evaluate_stream(&p, &[&split.train, &split.validation], &split.test, &opts)?;
            println!(
                "enhance={enhance} adjust={adjustment} avg_f1={:.4} train_fit={:.4} ({:?})",
                out.metrics.avg_f1,
                fit.metrics.avg_f1,
                t.elapsed()
            );
        }
    }
    Ok(())
}
