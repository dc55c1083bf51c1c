use std::fmt::Write as _;
use std::path::Path;

use super::{LearnerParams, WeightMatrix};
use crate::error::{Error, Result};

const HEADER: &str = "bilinear-model v1";

/// Trained weights plus the metadata needed to replay and validate them.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub weights: WeightMatrix,
    pub params: LearnerParams,
    pub seed: u64,
    pub doc_vocab_checksum: String,
    pub label_vocab_checksum: String,
}

impl TrainedModel {
    /// Text format: a key/value header followed by one `row` line per
    /// non-empty row (`row <index> <col>:<weight> ...`) and a final `end`.
    /// Weights use Rust's shortest round-trip float formatting.
    pub fn serialize(&self) -> String {
        let w = &self.weights;
        let p = &self.params;
        let mut out = String::new();
        let _ = writeln!(out, "{HEADER}");
        let _ = writeln!(out, "rows {}", w.rows());
        let _ = writeln!(out, "cols {}", w.cols());
        let _ = writeln!(out, "k {}", p.k);
        let _ = writeln!(out, "lambda {:?}", p.lambda);
        let _ = writeln!(out, "negatives_per_doc {}", p.negatives_per_doc);
        let _ = writeln!(out, "refine_passes {}", p.refine_passes);
        let _ = writeln!(out, "candidate_cap {}", p.candidate_cap);
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "doc_vocab {}", self.doc_vocab_checksum);
        let _ = writeln!(out, "label_vocab {}", self.label_vocab_checksum);
        for r in 0..w.rows() {
            let entries = w.row(r);
            if entries.is_empty() {
                continue;
            }
            let _ = write!(out, "row {r}");
            for (c, v) in entries {
                let _ = write!(out, " {c}:{v:?}");
            }
            out.push('\n');
        }
        out.push_str("end\n");
        out
    }

    pub fn deserialize(text: &str) -> Result<Self> {
        let bad = |m: String| Error::Validation(format!("model file: {m}"));
        let mut lines = text.lines();
        if lines.next() != Some(HEADER) {
            return Err(bad("unsupported header".into()));
        }
        let mut field = |key: &str| -> Result<String> {
            let line = lines.next().unwrap_or_default();
            line.strip_prefix(key)
                .and_then(|v| v.strip_prefix(' '))
                .map(str::to_string)
                .ok_or_else(|| bad(format!("expected `{key}`, found {line:?}")))
        };
        fn num<T: std::str::FromStr>(v: String, key: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Validation(format!("model file: bad value for {key}")))
        }
        let rows: usize = num(field("rows")?, "rows")?;
        let cols: usize = num(field("cols")?, "cols")?;
        let params = LearnerParams {
            k: num(field("k")?, "k")?,
            lambda: num(field("lambda")?, "lambda")?,
            negatives_per_doc: num(field("negatives_per_doc")?, "negatives_per_doc")?,
            refine_passes: num(field("refine_passes")?, "refine_passes")?,
            candidate_cap: num(field("candidate_cap")?, "candidate_cap")?,
        };
        let seed = num(field("seed")?, "seed")?;
        let doc_vocab_checksum = field("doc_vocab")?;
        let label_vocab_checksum = field("label_vocab")?;

        let mut row_entries = vec![Vec::new(); rows];
        let mut ended = false;
        for line in lines {
            if line == "end" {
                ended = true;
                break;
            }
            let mut parts = line.split(' ');
            if parts.next() != Some("row") {
                return Err(bad(format!("unexpected line {line:?}")));
            }
            let r: usize = num(parts.next().unwrap_or_default().to_string(), "row")?;
            if r >= rows {
                return Err(bad(format!("row {r} out of range")));
            }
            let mut entries = Vec::new();
            for item in parts {
                let (c, v) = item
                    .split_once(':')
                    .ok_or_else(|| bad(format!("malformed entry {item:?}")))?;
                let c: u32 = num(c.to_string(), "column")?;
                let v: f64 = num(v.to_string(), "weight")?;
                if c as usize >= cols || !v.is_finite() {
                    return Err(Error::NonFinite {
                        row: r,
                        col: c as usize,
                    });
                }
                entries.push((c, v));
            }
            if !entries.windows(2).all(|w| w[0].0 < w[1].0) {
                return Err(bad(format!("row {r} columns are not increasing")));
            }
            if entries.len() > params.k {
                return Err(bad(format!("row {r} exceeds the sparsity budget")));
            }
            row_entries[r] = entries;
        }
        if !ended {
            return Err(bad("truncated file".into()));
        }
        Ok(TrainedModel {
            weights: WeightMatrix::from_rows(rows, cols, row_entries),
            params,
            seed,
            doc_vocab_checksum,
            label_vocab_checksum,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.serialize()).map_err(|e| Error::io(path, e))
    }

    /// Loads a model and checks it against the vocabulary checksums it is
    /// going to be used with.
    pub fn load(path: &Path, doc_vocab_checksum: &str, label_vocab_checksum: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model = Self::deserialize(&text)?;
        if model.doc_vocab_checksum != doc_vocab_checksum {
            return Err(Error::ModelMismatch(
                "document vocabulary checksum differs".into(),
            ));
        }
        if model.label_vocab_checksum != label_vocab_checksum {
            return Err(Error::ModelMismatch(
                "label vocabulary checksum differs".into(),
            ));
        }
        Ok(model)
    }
}
