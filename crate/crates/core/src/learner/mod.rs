//! Bilinear zero-shot relevance model.
//!
//! A description vector `d` and a label vector `l` live in separate TF-IDF
//! spaces; their relevance is `dᵀ W l` with a row-sparse `W`. Training
//! minimizes `½‖W‖² + λ Σ log(1 + exp(-y dᵀ W l))` over sampled
//! (description, label) pairs under a per-row non-zero budget `K`.

mod model_file;
mod pairs;
mod solver;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

pub use model_file::TrainedModel;
pub use pairs::{build_training_pairs, TrainingPair};
pub use solver::{coordinate_gradient, objective, train};

use crate::corpus::LabelId;
use crate::error::{Error, Result};
use crate::features::SparseVector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerParams {
    /// Maximum non-zeros per row of `W`.
    pub k: usize,
    pub lambda: f64,
    pub negatives_per_doc: usize,
    pub refine_passes: usize,
    /// Maximum Phase-A candidates kept per row, by gradient magnitude.
    pub candidate_cap: usize,
}

impl Default for LearnerParams {
    fn default() -> Self {
        LearnerParams {
            k: 64,
            lambda: 10.0,
            negatives_per_doc: 20,
            refine_passes: 3,
            candidate_cap: 50_000,
        }
    }
}

impl LearnerParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.refine_passes == 0 || self.candidate_cap == 0 {
            return Err(Error::Config(
                "K, refine_passes and candidate_cap must be positive".into(),
            ));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::Config(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Row-sparse parameter matrix. Each row holds column-sorted entries.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    row_entries: Vec<Vec<(u32, f64)>>,
}

impl WeightMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        WeightMatrix {
            rows,
            cols,
            row_entries: vec![Vec::new(); rows],
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets. Later duplicates
    /// overwrite earlier ones; zeros are dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut m = WeightMatrix::zeros(rows, cols);
        for (r, c, v) in triplets {
            m.set(r, c, v)?;
        }
        Ok(m)
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) -> Result<()> {
        if row >= self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: row + 1,
            });
        }
        if col >= self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: col + 1,
            });
        }
        if !value.is_finite() {
            return Err(Error::NonFinite { row, col });
        }
        let entries = &mut self.row_entries[row];
        match entries.binary_search_by_key(&(col as u32), |e| e.0) {
            Ok(i) if value == 0.0 => {
                entries.remove(i);
            }
            Ok(i) => entries[i].1 = value,
            Err(_) if value == 0.0 => {}
            Err(i) => entries.insert(i, (col as u32, value)),
        }
        Ok(())
    }

    pub(crate) fn from_rows(rows: usize, cols: usize, row_entries: Vec<Vec<(u32, f64)>>) -> Self {
        debug_assert_eq!(row_entries.len(), rows);
        WeightMatrix {
            rows,
            cols,
            row_entries,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, row: usize) -> &[(u32, f64)] {
        &self.row_entries[row]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let r = &self.row_entries[row];
        r.binary_search_by_key(&(col as u32), |e| e.0)
            .map(|i| r[i].1)
            .unwrap_or(0.0)
    }

    pub fn nnz(&self) -> usize {
        self.row_entries.iter().map(Vec::len).sum()
    }

    pub fn max_row_nnz(&self) -> usize {
        self.row_entries.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.row_entries.iter().flatten().map(|e| e.1 * e.1).sum()
    }

    /// `dᵀ W` as a dense row over label-feature columns, accumulated in
    /// order of `d`'s non-zeros.
    pub fn project(&self, d: &SparseVector) -> Result<Vec<f64>> {
        if d.dim() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: d.dim(),
            });
        }
        let mut out = vec![0.0; self.cols];
        for &(a, da) in d.entries() {
            for &(b, w) in &self.row_entries[a as usize] {
                out[b as usize] += da * w;
            }
        }
        Ok(out)
    }
}

fn dot_projected(projected: &[f64], l: &SparseVector) -> f64 {
    l.entries()
        .iter()
        .map(|&(b, lb)| projected[b as usize] * lb)
        .sum()
}

/// `dᵀ W l`.
pub fn relevance(d: &SparseVector, l: &SparseVector, w: &WeightMatrix) -> Result<f64> {
    if l.dim() != w.cols {
        return Err(Error::DimensionMismatch {
            expected: w.cols,
            found: l.dim(),
        });
    }
    Ok(dot_projected(&w.project(d)?, l))
}

/// Logistic link of the training objective: the modelled probability that
/// a label applies, `σ(dᵀ W l)`. Monotone in the raw score.
pub fn relevance_probability(raw: f64) -> f64 {
    solver::sigmoid(raw)
}

/// Featurized label universe: ids with their label-space vectors.
#[derive(Clone, Debug, Default)]
pub struct LabelSet {
    pub ids: Vec<LabelId>,
    pub vectors: Vec<SparseVector>,
}

impl LabelSet {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn position(&self, id: &LabelId) -> Option<usize> {
        self.ids.binary_search(id).ok()
    }
}

pub(crate) fn rank_order(a: &(LabelId, f64), b: &(LabelId, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0))
}

/// Relevance of `d` to every label, in `labels` order.
pub fn score_all(d: &SparseVector, labels: &LabelSet, w: &WeightMatrix) -> Result<Vec<f64>> {
    let projected = w.project(d)?;
    labels
        .vectors
        .iter()
        .map(|l| {
            if l.dim() != w.cols {
                return Err(Error::DimensionMismatch {
                    expected: w.cols,
                    found: l.dim(),
                });
            }
            Ok(dot_projected(&projected, l))
        })
        .collect()
}

/// Scores every label and returns the best `min(k, |labels|)`, highest
/// first, ties broken by label id.
pub fn predict_topk(
    d: &SparseVector,
    labels: &LabelSet,
    w: &WeightMatrix,
    k: usize,
) -> Result<Vec<(LabelId, f64)>> {
    if labels.is_empty() {
        return Err(Error::Empty("label universe"));
    }
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let mut scored: Vec<(LabelId, f64)> = labels
        .ids
        .iter()
        .cloned()
        .zip(score_all(d, labels, w)?)
        .collect();
    let k = k.min(scored.len());
    if k < scored.len() {
        scored.select_nth_unstable_by(k - 1, rank_order);
        scored.truncate(k);
    }
    scored.sort_by(rank_order);
    Ok(scored)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(i: usize, dim: usize) -> SparseVector {
        SparseVector::new(vec![(i as u32, 1.0)], dim).unwrap()
    }

    fn labels(n: usize, dim: usize) -> LabelSet {
        LabelSet {
            ids: (0..n)
                .map(|i| LabelId::parse(&format!("lib{i}")).unwrap())
                .collect(),
            vectors: (0..n).map(|i| unit(i % dim, dim)).collect(),
        }
    }

    #[test]
    fn relevance_examples() {
        let w = WeightMatrix::zeros(3, 4);
        assert_eq!(relevance(&unit(1, 3), &unit(2, 4), &w).unwrap(), 0.0);
        let w = WeightMatrix::from_triplets(3, 4, [(1, 2, 5.0)]).unwrap();
        assert_eq!(relevance(&unit(1, 3), &unit(2, 4), &w).unwrap(), 5.0);
        assert!(relevance(&unit(1, 4), &unit(2, 4), &w).is_err());
        assert!(relevance(&unit(1, 3), &unit(2, 5), &w).is_err());
    }

    #[test]
    fn set_keeps_rows_sorted() {
        let mut w = WeightMatrix::zeros(1, 5);
        for c in [3, 0, 4, 1] {
            w.set(0, c, c as f64 + 1.0).unwrap();
        }
        w.set(0, 4, 0.0).unwrap();
        assert_eq!(w.row(0), [(0, 1.0), (1, 2.0), (3, 4.0)]);
        assert!(w.set(0, 1, f64::INFINITY).is_err());
    }

    #[test]
    fn zero_model_ranks_lexicographically() {
        let ls = labels(12, 4);
        let w = WeightMatrix::zeros(4, 4);
        let top = predict_topk(&unit(0, 4), &ls, &w, 3).unwrap();
        let ids: Vec<&str> = top.iter().map(|(l, _)| l.as_str()).collect();
        assert_eq!(ids, ["lib0", "lib1", "lib10"]);
        assert!(top.iter().all(|(_, s)| *s == 0.0));
    }

    #[test]
    fn k_is_clamped() {
        let ls = labels(5, 4);
        let w = WeightMatrix::zeros(4, 4);
        assert_eq!(predict_topk(&unit(0, 4), &ls, &w, 10).unwrap().len(), 5);
        assert!(predict_topk(&unit(0, 4), &LabelSet::default(), &w, 1).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(LearnerParams::default().validate().is_ok());
        let bad = LearnerParams {
            lambda: 0.0,
            ..LearnerParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = LearnerParams {
            k: 0,
            ..LearnerParams::default()
        };
        assert!(bad.validate().is_err());
    }
}
