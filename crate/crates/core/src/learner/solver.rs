//! One approximation/refinement round of hard-thresholding pursuit,
//! starting from `W = 0`.
//!
//! At `W = 0` every pair score is zero, so `σ(0) = ½` turns the gradient and
//! the diagonal Hessian of the objective into closed-form sums:
//!
//! ```text
//! g_ab = -(λ/2) Σ_p y_p d_a l_b        h_ab = (λ/4) Σ_p (d_a l_b)² + 1
//! ```
//!
//! Each row keeps its `K` entries with the largest predicted decrease
//! `g²/(2h)` and starts them at the Newton point `-g/h`. Refinement then
//! runs coordinate-wise Newton passes on the exact objective over that
//! fixed support.

use rayon::prelude::*;

use super::{LearnerParams, TrainingPair, WeightMatrix};
use crate::error::{Error, Result};
use crate::features::SparseVector;

const MAX_BACKTRACK: usize = 30;

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn check_dims(docs: &[SparseVector], labels: &[SparseVector]) -> Result<(usize, usize)> {
    let rows = docs.first().ok_or(Error::Empty("document features"))?.dim();
    let cols = labels.first().ok_or(Error::Empty("label features"))?.dim();
    for d in docs {
        if d.dim() != rows {
            return Err(Error::DimensionMismatch {
                expected: rows,
                found: d.dim(),
            });
        }
    }
    for l in labels {
        if l.dim() != cols {
            return Err(Error::DimensionMismatch {
                expected: cols,
                found: l.dim(),
            });
        }
    }
    Ok((rows, cols))
}

fn check_pairs(pairs: &[TrainingPair], docs: usize, labels: usize) -> Result<()> {
    for p in pairs {
        if p.doc as usize >= docs || p.label as usize >= labels || !matches!(p.y, 1 | -1) {
            return Err(Error::Validation(format!("invalid training pair {p:?}")));
        }
    }
    Ok(())
}

fn pair_scores(
    w: &WeightMatrix,
    pairs: &[TrainingPair],
    docs: &[SparseVector],
    labels: &[SparseVector],
) -> Result<Vec<f64>> {
    let mut scores = vec![0.0; pairs.len()];
    let mut i = 0;
    while i < pairs.len() {
        let doc = pairs[i].doc;
        let projected = w.project(&docs[doc as usize])?;
        while i < pairs.len() && pairs[i].doc == doc {
            scores[i] = labels[pairs[i].label as usize]
                .entries()
                .iter()
                .map(|&(b, lb)| projected[b as usize] * lb)
                .sum();
            i += 1;
        }
    }
    Ok(scores)
}

/// `½‖W‖² + λ Σ_p log(1 + exp(-y_p d_pᵀ W l_p))`.
pub fn objective(
    w: &WeightMatrix,
    pairs: &[TrainingPair],
    docs: &[SparseVector],
    labels: &[SparseVector],
    lambda: f64,
) -> Result<f64> {
    let scores = pair_scores(w, pairs, docs, labels)?;
    let loss: f64 = pairs
        .iter()
        .zip(&scores)
        .map(|(p, s)| softplus(-(p.y as f64) * s))
        .sum();
    Ok(0.5 * w.frobenius_sq() + lambda * loss)
}

/// Analytic partial derivative of [`objective`] with respect to `W[row, col]`.
pub fn coordinate_gradient(
    w: &WeightMatrix,
    pairs: &[TrainingPair],
    docs: &[SparseVector],
    labels: &[SparseVector],
    lambda: f64,
    row: usize,
    col: usize,
) -> Result<f64> {
    let scores = pair_scores(w, pairs, docs, labels)?;
    let mut g = 0.0;
    for (p, s) in pairs.iter().zip(&scores) {
        let c = docs[p.doc as usize].get(row as u32) * labels[p.label as usize].get(col as u32);
        if c != 0.0 {
            let y = p.y as f64;
            g += -y * sigmoid(-y * s) * c;
        }
    }
    Ok(w.get(row, col) + lambda * g)
}

/// Documents grouped by feature row, and each document's pairs.
struct PairIndex {
    row_docs: Vec<Vec<(u32, f64)>>,
    doc_pairs: Vec<Vec<u32>>,
}

impl PairIndex {
    fn new(pairs: &[TrainingPair], docs: &[SparseVector], rows: usize) -> Self {
        let mut doc_pairs = vec![Vec::new(); docs.len()];
        for (i, p) in pairs.iter().enumerate() {
            doc_pairs[p.doc as usize].push(i as u32);
        }
        let mut row_docs = vec![Vec::new(); rows];
        for (doc, d) in docs.iter().enumerate() {
            if doc_pairs[doc].is_empty() {
                continue;
            }
            for &(a, da) in d.entries() {
                row_docs[a as usize].push((doc as u32, da));
            }
        }
        PairIndex {
            row_docs,
            doc_pairs,
        }
    }
}

struct Scratch {
    grad: Vec<f64>,
    curv: Vec<f64>,
    seen: Vec<bool>,
    touched: Vec<u32>,
}

/// Phase A for one row: closed-form gradient/curvature at zero, capped
/// candidate set, top-K by predicted objective decrease.
fn approximate_row(
    row: usize,
    index: &PairIndex,
    pairs: &[TrainingPair],
    labels: &[SparseVector],
    params: &LearnerParams,
    scratch: &mut Scratch,
) -> Result<Vec<(u32, f64)>> {
    let half = params.lambda / 2.0;
    let quarter = params.lambda / 4.0;
    for &(doc, da) in &index.row_docs[row] {
        for &pi in &index.doc_pairs[doc as usize] {
            let p = pairs[pi as usize];
            let y = p.y as f64;
            for &(b, lb) in labels[p.label as usize].entries() {
                let c = da * lb;
                let slot = b as usize;
                if !scratch.seen[slot] {
                    scratch.seen[slot] = true;
                    scratch.touched.push(b);
                }
                scratch.grad[slot] -= half * y * c;
                scratch.curv[slot] += quarter * c * c;
            }
        }
    }

    let mut cands: Vec<(u32, f64, f64)> = scratch
        .touched
        .drain(..)
        .map(|b| {
            let slot = b as usize;
            let out = (b, scratch.grad[slot], scratch.curv[slot] + 1.0);
            scratch.grad[slot] = 0.0;
            scratch.curv[slot] = 0.0;
            scratch.seen[slot] = false;
            out
        })
        .filter(|c| c.1 != 0.0)
        .collect();
    for c in &cands {
        if !(c.1.is_finite() && c.2.is_finite()) {
            return Err(Error::NonFinite {
                row,
                col: c.0 as usize,
            });
        }
    }
    if cands.len() > params.candidate_cap {
        cands.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
        cands.truncate(params.candidate_cap);
    }
    cands.sort_by(|a, b| {
        let sa = a.1 * a.1 / (2.0 * a.2);
        let sb = b.1 * b.1 / (2.0 * b.2);
        sb.total_cmp(&sa).then(a.0.cmp(&b.0))
    });
    cands.truncate(params.k);
    let mut kept: Vec<(u32, f64)> = cands.into_iter().map(|(b, g, h)| (b, -g / h)).collect();
    kept.sort_by_key(|e| e.0);
    Ok(kept)
}

/// Change in objective when the coordinate moves from `w` to `w + step`,
/// given the coordinate's (pair, d_a·l_b) coefficients.
fn coordinate_delta(
    w: f64,
    step: f64,
    coefs: &[(u32, f64)],
    pairs: &[TrainingPair],
    scores: &[f64],
    lambda: f64,
) -> f64 {
    let reg = 0.5 * ((w + step) * (w + step) - w * w);
    let loss: f64 = coefs
        .iter()
        .map(|&(pi, c)| {
            let y = pairs[pi as usize].y as f64;
            let s = scores[pi as usize];
            softplus(-y * (s + step * c)) - softplus(-y * s)
        })
        .sum();
    reg + lambda * loss
}

/// Trains `W` on `pairs`. `docs[i]` and `labels[j]` are the featurized
/// document and label referenced by pair indices.
pub fn train(
    pairs: &[TrainingPair],
    docs: &[SparseVector],
    labels: &[SparseVector],
    params: &LearnerParams,
) -> Result<WeightMatrix> {
    params.validate()?;
    if pairs.is_empty() {
        return Err(Error::Empty("training pairs"));
    }
    let (rows, cols) = check_dims(docs, labels)?;
    check_pairs(pairs, docs.len(), labels.len())?;
    let mut sorted = pairs.to_vec();
    sorted.sort_by_key(|p| (p.doc, p.label));
    let pairs = sorted.as_slice();
    let index = PairIndex::new(pairs, docs, rows);

    let row_entries: Vec<Vec<(u32, f64)>> = (0..rows)
        .into_par_iter()
        .map_init(
            || Scratch {
                grad: vec![0.0; cols],
                curv: vec![0.0; cols],
                seen: vec![false; cols],
                touched: Vec::new(),
            },
            |scratch, row| approximate_row(row, &index, pairs, labels, params, scratch),
        )
        .collect::<Result<_>>()?;
    let mut w = WeightMatrix::from_rows(rows, cols, row_entries);

    // The per-row Newton starts assume independent coordinates; shrink the
    // joint start until it is no worse than W = 0.
    let at_zero = params.lambda * pairs.len() as f64 * std::f64::consts::LN_2;
    let mut scores = pair_scores(&w, pairs, docs, labels)?;
    for _ in 0..MAX_BACKTRACK {
        let current = 0.5 * w.frobenius_sq()
            + params.lambda
                * pairs
                    .iter()
                    .zip(&scores)
                    .map(|(p, s)| softplus(-(p.y as f64) * s))
                    .sum::<f64>();
        if current <= at_zero {
            break;
        }
        for e in w.row_entries.iter_mut().flatten() {
            e.1 *= 0.5;
        }
        scores.iter_mut().for_each(|s| *s *= 0.5);
    }

    let mut coefs: Vec<Vec<(u32, f64)>> = Vec::new();
    for _ in 0..params.refine_passes {
        for row in 0..rows {
            let support: Vec<u32> = w.row_entries[row].iter().map(|e| e.0).collect();
            if support.is_empty() {
                continue;
            }
            coefs.resize_with(support.len(), Vec::new);
            coefs.iter_mut().for_each(Vec::clear);
            for &(doc, da) in &index.row_docs[row] {
                for &pi in &index.doc_pairs[doc as usize] {
                    let p = pairs[pi as usize];
                    for &(b, lb) in labels[p.label as usize].entries() {
                        if let Ok(j) = support.binary_search(&b) {
                            coefs[j].push((pi, da * lb));
                        }
                    }
                }
            }
            for (j, coef) in coefs.iter().enumerate().take(support.len()) {
                let cur = w.row_entries[row][j].1;
                let (mut grad, mut hess) = (cur, 1.0);
                for &(pi, c) in coef {
                    let y = pairs[pi as usize].y as f64;
                    let s = scores[pi as usize];
                    grad += params.lambda * (-y * sigmoid(-y * s) * c);
                    hess += params.lambda * sigmoid(s) * sigmoid(-s) * c * c;
                }
                let mut step = (-grad / hess).clamp(-1.0, 1.0);
                if !step.is_finite() {
                    return Err(Error::NonFinite {
                        row,
                        col: support[j] as usize,
                    });
                }
                let mut accepted = false;
                for _ in 0..MAX_BACKTRACK {
                    if step == 0.0 {
                        break;
                    }
                    if coordinate_delta(cur, step, coef, pairs, &scores, params.lambda) <= 0.0 {
                        accepted = true;
                        break;
                    }
                    step *= 0.5;
                }
                if !accepted {
                    continue;
                }
                w.row_entries[row][j].1 = cur + step;
                for &(pi, c) in coef {
                    scores[pi as usize] += step * c;
                }
            }
        }
    }
    for row in &mut w.row_entries {
        row.retain(|e| e.1 != 0.0);
    }
    Ok(w)
}
