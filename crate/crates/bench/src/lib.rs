//! Shared fixtures for the benchmarks.

use vulnlabel_core::corpus::{chronological_split, ChronologicalSplit, SplitSpec};
use vulnlabel_core::synthetic::{generate, SyntheticConfig};

pub fn synthetic_split(n_reports: usize) -> ChronologicalSplit {
    let data = generate(&SyntheticConfig {
        n_reports,
        n_libraries: 80,
        ..Default::default()
    })
    .expect("synthetic corpus");
    chronological_split(&data, SplitSpec::default()).expect("split")
}
