use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LearnerParams;
use crate::features::{CosineIndex, SparseVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrainingPair {
    pub doc: u32,
    pub label: u32,
    /// `+1` when the label is ground truth for the document, else `-1`.
    pub y: i8,
}

/// Positive pairs for every document, plus up to `negatives_per_doc`
/// negatives: the non-positive labels most cosine-similar to the document
/// in the shared matching space, padded with uniformly drawn non-positive
/// labels. Documents with no positives are skipped.
///
/// `doc_match` and `label_index` must live in the same space; the order of
/// `label_index` items defines the label indices.
pub fn build_training_pairs(
    positives: &[Vec<u32>],
    doc_match: &[SparseVector],
    label_index: &CosineIndex,
    params: &LearnerParams,
    seed: u64,
) -> Vec<TrainingPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_labels = label_index.len();
    let mut out = Vec::new();
    for (doc, pos) in positives.iter().enumerate() {
        if pos.is_empty() {
            log::warn!("document {doc} has no positive labels; skipped");
            continue;
        }
        let pos: BTreeSet<u32> = pos.iter().copied().collect();
        out.extend(pos.iter().map(|&label| TrainingPair {
            doc: doc as u32,
            label,
            y: 1,
        }));
        let want = params.negatives_per_doc;
        if want == 0 {
            continue;
        }

        let scores = label_index.scores(&doc_match[doc]);
        let mut hard: Vec<(u32, f64)> = scores
            .iter()
            .enumerate()
            .filter(|&(i, s)| *s > 0.0 && !pos.contains(&(i as u32)))
            .map(|(i, s)| (i as u32, *s))
            .collect();
        hard.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        hard.truncate(want);
        let mut chosen: BTreeSet<u32> = hard.iter().map(|h| h.0).collect();

        if chosen.len() < want {
            let pool: Vec<u32> = (0..n_labels as u32)
                .filter(|i| !pos.contains(i) && !chosen.contains(i))
                .collect();
            let extra: Vec<u32> = pool
                .choose_multiple(&mut rng, want - chosen.len())
                .copied()
                .collect();
            chosen.extend(extra);
        }
        out.extend(chosen.into_iter().map(|label| TrainingPair {
            doc: doc as u32,
            label,
            y: -1,
        }));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(entries: &[(u32, f64)], dim: usize) -> SparseVector {
        SparseVector::new(entries.to_vec(), dim).unwrap()
    }

    fn params(n: usize) -> LearnerParams {
        LearnerParams {
            negatives_per_doc: n,
            ..LearnerParams::default()
        }
    }

    // Labels x=0, y=1, z=2; y shares a term with the document, z none.
    fn fixture() -> (Vec<SparseVector>, CosineIndex) {
        let labels = vec![v(&[(0, 1.0)], 3), v(&[(1, 1.0)], 3), v(&[(2, 1.0)], 3)];
        let docs = vec![v(&[(0, 0.8), (1, 0.6)], 3)];
        (docs, CosineIndex::new(&labels, 3))
    }

    #[test]
    fn hard_then_random_negatives() {
        let (docs, idx) = fixture();
        let pairs = build_training_pairs(&[vec![0]], &docs, &idx, &params(2), 7);
        assert_eq!(
            pairs,
            [
                TrainingPair {
                    doc: 0,
                    label: 0,
                    y: 1
                },
                TrainingPair {
                    doc: 0,
                    label: 1,
                    y: -1
                },
                TrainingPair {
                    doc: 0,
                    label: 2,
                    y: -1
                },
            ]
        );
    }

    #[test]
    fn hard_negatives_come_first() {
        let (docs, idx) = fixture();
        let pairs = build_training_pairs(&[vec![0]], &docs, &idx, &params(1), 7);
        assert_eq!(
            pairs[1],
            TrainingPair {
                doc: 0,
                label: 1,
                y: -1
            }
        );
        assert_eq!(pairs.len(), 2);
    }

    #[test]
    fn zero_negatives_and_skipped_docs() {
        let (mut docs, idx) = fixture();
        docs.push(v(&[], 3));
        let pairs = build_training_pairs(&[vec![0], vec![]], &docs, &idx, &params(0), 7);
        assert_eq!(
            pairs,
            [TrainingPair {
                doc: 0,
                label: 0,
                y: 1
            }]
        );
    }

    #[test]
    fn deterministic_given_seed() {
        let labels: Vec<SparseVector> = (0..40).map(|i| v(&[(i % 5, 1.0)], 5)).collect();
        let idx = CosineIndex::new(&labels, 5);
        let docs: Vec<SparseVector> = (0..10).map(|i| v(&[((i % 3) as u32, 1.0)], 5)).collect();
        let pos: Vec<Vec<u32>> = (0..10).map(|i| vec![i as u32]).collect();
        let p = params(12);
        let a = build_training_pairs(&pos, &docs, &idx, &p, 99);
        assert_eq!(a, build_training_pairs(&pos, &docs, &idx, &p, 99));
        assert_eq!(a.len(), 10 * 13);
    }
}
