//! Vocabularies and sparse TF-IDF vectors.
//!
//! Term weights are `tf * idf` with raw term counts and the smoothed
//! `idf = ln((1 + n_docs) / (1 + df)) + 1`; the non-bias part of every
//! vector is L2-normalized. A bias-augmented vector carries one extra
//! column, the last one, fixed at `1.0`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Sorted sparse vector with strictly increasing column ids.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
    dim: usize,
}

impl SparseVector {
    /// Sorts `entries`, merges duplicate columns and drops zeros.
    pub fn new(mut entries: Vec<(u32, f64)>, dim: usize) -> Result<Self> {
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
        for (c, v) in entries {
            if c as usize >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: c as usize + 1,
                });
            }
            if !v.is_finite() {
                return Err(Error::Validation(format!("non-finite value at column {c}")));
            }
            match merged.last_mut() {
                Some(last) if last.0 == c => last.1 += v,
                _ => merged.push((c, v)),
            }
        }
        merged.retain(|e| e.1 != 0.0);
        Ok(SparseVector {
            entries: merged,
            dim,
        })
    }

    pub fn zeros(dim: usize) -> Self {
        SparseVector {
            entries: Vec::new(),
            dim,
        }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        SparseVector {
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i as u32, *v))
                .collect(),
            dim: values.len(),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(c, v) in &self.entries {
            out[c as usize] = v;
        }
        out
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, col: u32) -> f64 {
        self.entries
            .binary_search_by_key(&col, |e| e.0)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt()
    }
}

/// Merge-join dot product.
pub fn sparse_dot(u: &SparseVector, v: &SparseVector) -> Result<f64> {
    if u.dim != v.dim {
        return Err(Error::DimensionMismatch {
            expected: u.dim,
            found: v.dim,
        });
    }
    let (a, b) = (&u.entries, &v.entries);
    let (mut i, mut j, mut acc) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    Ok(acc)
}

/// Unigrams, plus `a_b` bigrams when `ngram_max == 2`.
pub fn ngrams(text: &str, ngram_max: usize) -> Vec<String> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let mut out: Vec<String> = tokens.iter().map(|t| t.to_string()).collect();
    if ngram_max >= 2 {
        out.extend(tokens.windows(2).map(|w| format!("{}_{}", w[0], w[1])));
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, u32>,
    doc_freq: Vec<u32>,
    n_docs: usize,
    ngram_max: usize,
}

/// Fits a vocabulary over whitespace-tokenized `texts`, keeping terms with
/// document frequency at least `min_df`. Terms are ordered lexicographically.
pub fn fit_vocabulary<S: AsRef<str>>(
    texts: &[S],
    ngram_max: usize,
    min_df: usize,
) -> Result<Vocabulary> {
    if texts.is_empty() {
        return Err(Error::Empty("vocabulary corpus"));
    }
    if !(1..=2).contains(&ngram_max) {
        return Err(Error::Config(format!(
            "ngram_max must be 1 or 2, got {ngram_max}"
        )));
    }
    let mut df: BTreeMap<String, u32> = BTreeMap::new();
    for text in texts {
        let uniq: HashSet<String> = ngrams(text.as_ref(), ngram_max).into_iter().collect();
        for t in uniq {
            *df.entry(t).or_default() += 1;
        }
    }
    let (terms, doc_freq): (Vec<String>, Vec<u32>) = df
        .into_iter()
        .filter(|&(_, c)| c as usize >= min_df.max(1))
        .unzip();
    Ok(Vocabulary::from_parts(
        terms,
        doc_freq,
        texts.len(),
        ngram_max,
    ))
}

impl Vocabulary {
    fn from_parts(terms: Vec<String>, doc_freq: Vec<u32>, n_docs: usize, ngram_max: usize) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary {
            terms,
            index,
            doc_freq,
            n_docs,
            ngram_max,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn doc_freq(&self, term: &str) -> Option<u32> {
        self.index_of(term).map(|i| self.doc_freq[i as usize])
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn ngram_max(&self) -> usize {
        self.ngram_max
    }

    pub fn idf(&self, col: u32) -> f64 {
        let df = self.doc_freq[col as usize] as f64;
        ((1.0 + self.n_docs as f64) / (1.0 + df)).ln() + 1.0
    }

    /// Width of transformed vectors, counting the bias column if requested.
    pub fn dim(&self, add_bias: bool) -> usize {
        self.terms.len() + usize::from(add_bias)
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "vocab v1");
        let _ = writeln!(out, "ngram_max {}", self.ngram_max);
        let _ = writeln!(out, "n_docs {}", self.n_docs);
        let _ = writeln!(out, "terms {}", self.terms.len());
        for (t, df) in self.terms.iter().zip(&self.doc_freq) {
            let _ = writeln!(out, "{t}\t{df}");
        }
        out
    }

    pub fn deserialize(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::Validation(format!("vocabulary sidecar: {m}"));
        let mut lines = text.lines();
        if lines.next() != Some("vocab v1") {
            return Err(bad("unsupported header"));
        }
        let mut field = |key: &str| -> Result<usize> {
            lines
                .next()
                .and_then(|l| l.strip_prefix(key))
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| bad(&format!("missing {key}")))
        };
        let ngram_max = field("ngram_max ")?;
        let n_docs = field("n_docs ")?;
        let n_terms = field("terms ")?;
        let mut terms = Vec::with_capacity(n_terms);
        let mut doc_freq = Vec::with_capacity(n_terms);
        for line in lines {
            let (t, df) = line
                .split_once('\t')
                .ok_or_else(|| bad("malformed term line"))?;
            terms.push(t.to_string());
            doc_freq.push(
                df.parse()
                    .map_err(|_| bad("malformed document frequency"))?,
            );
        }
        if terms.len() != n_terms {
            return Err(bad("term count mismatch"));
        }
        Ok(Vocabulary::from_parts(terms, doc_freq, n_docs, ngram_max))
    }

    /// SHA-256 of the serialized form, hex encoded.
    pub fn checksum(&self) -> String {
        sha256_hex(self.serialize().as_bytes())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.serialize()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::deserialize(&text)
    }
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// TF-IDF vector of `text`. Out-of-vocabulary terms are ignored.
pub fn tfidf_transform(text: &str, vocab: &Vocabulary, add_bias: bool) -> SparseVector {
    let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
    for term in ngrams(text, vocab.ngram_max) {
        if let Some(col) = vocab.index_of(&term) {
            *counts.entry(col).or_default() += 1.0;
        }
    }
    let mut entries: Vec<(u32, f64)> = counts
        .into_iter()
        .map(|(c, tf)| (c, tf * vocab.idf(c)))
        .collect();
    let norm = entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
    if norm > 0.0 {
        for e in &mut entries {
            e.1 /= norm;
        }
    }
    if add_bias {
        entries.push((vocab.len() as u32, 1.0));
    }
    SparseVector {
        entries,
        dim: vocab.dim(add_bias),
    }
}

/// Inverted index over unit-norm item vectors for cosine ranking.
#[derive(Clone, Debug)]
pub struct CosineIndex {
    postings: Vec<Vec<(u32, f64)>>,
    n_items: usize,
}

impl CosineIndex {
    pub fn new(items: &[SparseVector], dim: usize) -> Self {
        let mut postings = vec![Vec::new(); dim];
        for (i, v) in items.iter().enumerate() {
            for &(c, w) in v.entries() {
                postings[c as usize].push((i as u32, w));
            }
        }
        CosineIndex {
            postings,
            n_items: items.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.n_items
    }

    pub fn is_empty(&self) -> bool {
        self.n_items == 0
    }

    /// Dot products of `query` with every item, in item order.
    pub fn scores(&self, query: &SparseVector) -> Vec<f64> {
        let mut out = vec![0.0; self.n_items];
        for &(c, q) in query.entries() {
            if let Some(list) = self.postings.get(c as usize) {
                for &(i, w) in list {
                    out[i as usize] += q * w;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn vocabulary_examples() {
        let v = fit_vocabulary(&["a b", "b c"], 1, 1).unwrap();
        assert_eq!(v.terms(), ["a", "b", "c"]);
        assert_eq!(["a", "b", "c"].map(|t| v.doc_freq(t).unwrap()), [1, 2, 1]);
        let v = fit_vocabulary(&["a b", "b c"], 1, 2).unwrap();
        assert_eq!(v.terms(), ["b"]);
        let v = fit_vocabulary(&["x y"], 2, 1).unwrap();
        assert_eq!(v.terms(), ["x", "x_y", "y"]);
        assert!(fit_vocabulary::<&str>(&[], 1, 1).is_err());
        assert!(fit_vocabulary(&["a"], 3, 1).is_err());
    }

    #[test]
    fn tfidf_examples() {
        let v = fit_vocabulary(&["a"], 1, 1).unwrap();
        assert_eq!(tfidf_transform("a", &v, false).entries(), [(0, 1.0)]);

        let v = fit_vocabulary(&["a b", "b"], 1, 1).unwrap();
        let out = tfidf_transform("zzz", &v, true);
        assert_eq!(out.entries(), [(2, 1.0)]);
        assert_eq!(out.dim(), 3);

        // idf(a) = ln(3/2) + 1, idf(b) = ln(3/3) + 1 = 1.
        let idf_a = (3.0f64 / 2.0).ln() + 1.0;
        assert!((v.idf(0) - idf_a).abs() < 1e-15);
        assert!((v.idf(1) - 1.0).abs() < 1e-15);
        let ab = tfidf_transform("a b", &v, false);
        let norm = (idf_a * idf_a + 1.0).sqrt();
        assert!((ab.get(0) - idf_a / norm).abs() < 1e-15);
        assert!((ab.get(1) - 1.0 / norm).abs() < 1e-15);
        assert_eq!(tfidf_transform("a", &v, false).entries(), [(0, 1.0)]);
    }

    #[test]
    fn dot_examples() {
        let u = SparseVector::new(vec![(0, 1.0), (2, 3.0)], 3).unwrap();
        let v = SparseVector::new(vec![(2, 2.0)], 3).unwrap();
        assert_eq!(sparse_dot(&u, &v).unwrap(), 6.0);
        let w = SparseVector::new(vec![(1, 2.0)], 3).unwrap();
        assert_eq!(sparse_dot(&u, &w).unwrap(), 0.0);
        assert!(sparse_dot(&u, &SparseVector::zeros(4)).is_err());
    }

    #[test]
    fn constructor_validates() {
        assert!(SparseVector::new(vec![(3, 1.0)], 3).is_err());
        assert!(SparseVector::new(vec![(0, f64::NAN)], 3).is_err());
        let v = SparseVector::new(vec![(2, 1.0), (0, 0.0), (2, 1.0)], 3).unwrap();
        assert_eq!(v.entries(), [(2, 2.0)]);
    }

    #[test]
    fn sidecar_round_trip() {
        let v = fit_vocabulary(&["a b c", "b c_d"], 2, 1).unwrap();
        let back = Vocabulary::deserialize(&v.serialize()).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.checksum(), v.checksum());
        assert!(Vocabulary::deserialize("vocab v9\n").is_err());
    }

    #[test]
    fn cosine_index_scores() {
        let items = vec![
            SparseVector::new(vec![(0, 1.0)], 2).unwrap(),
            SparseVector::new(vec![(0, 0.6), (1, 0.8)], 2).unwrap(),
        ];
        let idx = CosineIndex::new(&items, 2);
        let q = SparseVector::new(vec![(1, 1.0)], 2).unwrap();
        assert_eq!(idx.scores(&q), [0.0, 0.8]);
    }

    fn text_strategy() -> impl Strategy<Value = String> {
        prop::collection::vec("[a-f]", 1..12).prop_map(|v| v.join(" "))
    }

    proptest! {
        #[test]
        fn transformed_vectors_are_unit_or_empty(
            corpus in prop::collection::vec(text_strategy(), 1..6),
            text in text_strategy(),
            bias in any::<bool>(),
        ) {
            let v = fit_vocabulary(&corpus, 1, 1).unwrap();
            let x = tfidf_transform(&text, &v, bias);
            let body: Vec<f64> = x.entries().iter()
                .filter(|e| !bias || (e.0 as usize) < v.len())
                .map(|e| e.1)
                .collect();
            prop_assert!(body.iter().all(|w| *w > 0.0));
            let n = body.iter().map(|w| w * w).sum::<f64>().sqrt();
            prop_assert!(body.is_empty() || (n - 1.0).abs() < 1e-9);
            prop_assert!((0..v.len() as u32).all(|c| v.idf(c) >= 1.0));
        }

        #[test]
        fn transform_ignores_token_order(mut tokens in prop::collection::vec("[a-f]", 1..10)) {
            let v = fit_vocabulary(&["a b c", "d e f a"], 1, 1).unwrap();
            let x = tfidf_transform(&tokens.join(" "), &v, true);
            tokens.reverse();
            prop_assert_eq!(x, tfidf_transform(&tokens.join(" "), &v, true));
        }

        #[test]
        fn dot_matches_dense_and_is_symmetric(
            a in prop::collection::vec(-2.0f64..2.0, 50),
            b in prop::collection::vec(-2.0f64..2.0, 50),
            mask in prop::collection::vec(any::<bool>(), 50),
        ) {
            let a: Vec<f64> = a.iter().zip(&mask).map(|(v, m)| if *m { *v } else { 0.0 }).collect();
            let u = SparseVector::from_dense(&a);
            let v = SparseVector::from_dense(&b);
            let dense: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
            let d = sparse_dot(&u, &v).unwrap();
            prop_assert!((d - dense).abs() < 1e-12);
            prop_assert_eq!(d, sparse_dot(&v, &u).unwrap());
        }
    }
}
