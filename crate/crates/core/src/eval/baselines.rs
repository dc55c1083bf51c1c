//! Reference rankers: name occurrence counting, CPE field extraction and
//! TF-IDF cosine retrieval.

use std::collections::BTreeMap;

use aho_corasick::AhoCorasick;

use crate::corpus::{Label, LabelId, VulnerabilityReport};
use crate::enhance::{select_references, EnhanceConfig, Enhancer};
use crate::error::Result;
use crate::features::{fit_vocabulary, tfidf_transform, CosineIndex, SparseVector, Vocabulary};
use crate::pipeline::label_match_text;

fn rank(mut scored: Vec<(LabelId, f64)>, k: usize) -> Vec<(LabelId, f64)> {
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

/// Counts whole-word, case-insensitive occurrences of library names.
pub struct ExactMatcher {
    automaton: AhoCorasick,
    /// Pattern index to library name.
    pattern_names: Vec<String>,
    /// Library name to the labels carrying it.
    labels_by_name: BTreeMap<String, Vec<LabelId>>,
    include_references: bool,
}

impl ExactMatcher {
    pub fn new<'a>(
        universe: impl IntoIterator<Item = &'a LabelId>,
        include_references: bool,
    ) -> Self {
        let mut labels_by_name: BTreeMap<String, Vec<LabelId>> = BTreeMap::new();
        for l in universe {
            labels_by_name
                .entry(l.name().to_string())
                .or_default()
                .push(l.clone());
        }
        let mut patterns = Vec::new();
        let mut pattern_names = Vec::new();
        for name in labels_by_name.keys() {
            patterns.push(name.clone());
            pattern_names.push(name.clone());
            if name.contains('_') {
                patterns.push(name.replace('_', " "));
                pattern_names.push(name.clone());
            }
        }
        let automaton = AhoCorasick::builder()
            .ascii_case_insensitive(true)
            .build(&patterns)
            .expect("library names form a valid automaton");
        ExactMatcher {
            automaton,
            pattern_names,
            labels_by_name,
            include_references,
        }
    }

    pub fn text(&self, report: &VulnerabilityReport, cfg: &EnhanceConfig) -> String {
        let mut text = report.description.clone();
        if self.include_references {
            for r in select_references(report, cfg) {
                text.push('\n');
                text.push_str(&r.content());
            }
        }
        text
    }

    pub fn counts(&self, text: &str) -> BTreeMap<&str, usize> {
        let bytes = text.as_bytes();
        let is_word = |b: u8| b.is_ascii_alphanumeric();
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for m in self.automaton.find_overlapping_iter(text) {
            let before_ok = m.start() == 0 || !is_word(bytes[m.start() - 1]);
            let after_ok = m.end() == bytes.len() || !is_word(bytes[m.end()]);
            if before_ok && after_ok {
                *counts
                    .entry(self.pattern_names[m.pattern().as_usize()].as_str())
                    .or_default() += 1;
            }
        }
        counts
    }

    /// Labels whose library name occurs in the report, most occurrences
    /// first, ties by label id.
    pub fn predict(
        &self,
        report: &VulnerabilityReport,
        cfg: &EnhanceConfig,
        k: usize,
    ) -> Vec<(LabelId, f64)> {
        let text = self.text(report, cfg);
        let scored = self
            .counts(&text)
            .into_iter()
            .flat_map(|(name, c)| {
                self.labels_by_name[name]
                    .iter()
                    .map(move |l| (l.clone(), c as f64))
            })
            .collect();
        rank(scored, k)
    }
}

/// Labels named by a report's CPE strings: the product, then
/// `product@version` when the version is concrete. Malformed entries are
/// skipped.
pub fn baseline_cpe(report: &VulnerabilityReport) -> Vec<LabelId> {
    let mut out: Vec<LabelId> = Vec::new();
    let mut push = |l: LabelId| {
        if !out.contains(&l) {
            out.push(l);
        }
    };
    for entry in &report.cpe_entries {
        let fields: Vec<&str> = entry.split(':').collect();
        if fields.len() < 6 || fields[0] != "cpe" || fields[1] != "2.3" {
            log::warn!("report {}: skipping malformed CPE {entry:?}", report.id);
            continue;
        }
        let product = fields[4].replace('\\', "");
        let version = fields[5].replace('\\', "");
        if matches!(product.as_str(), "" | "*" | "-") {
            log::warn!("report {}: CPE without product {entry:?}", report.id);
            continue;
        }
        let Ok(name) = LabelId::parse(&product) else {
            continue;
        };
        push(name.clone());
        if !matches!(version.as_str(), "" | "*" | "-") {
            if let Ok(l) = LabelId::from_parts(name.as_str(), Some(&version)) {
                push(l);
            }
        }
    }
    out
}

/// Cosine retrieval over a TF-IDF space shared by report texts and label
/// feature texts.
pub struct IrBaseline {
    vocab: Vocabulary,
    ids: Vec<LabelId>,
    index: CosineIndex,
}

impl IrBaseline {
    /// `doc_texts` are enhanced training descriptions; label feature texts
    /// are mapped into the same stemmed space first.
    pub fn fit(
        doc_texts: &[String],
        labels: &[Label],
        cfg: &EnhanceConfig,
        ngram_max: usize,
    ) -> Result<Self> {
        let label_texts: Vec<String> = labels.iter().map(|l| label_match_text(l, cfg)).collect();
        let corpus: Vec<&str> = doc_texts
            .iter()
            .chain(label_texts.iter())
            .map(String::as_str)
            .collect();
        let vocab = fit_vocabulary(&corpus, ngram_max, 1)?;
        let vectors: Vec<SparseVector> = label_texts
            .iter()
            .map(|t| tfidf_transform(t, &vocab, false))
            .collect();
        let index = CosineIndex::new(&vectors, vocab.dim(false));
        Ok(IrBaseline {
            vocab,
            ids: labels.iter().map(|l| l.id.clone()).collect(),
            index,
        })
    }

    pub fn predict_text(&self, text: &str, k: usize) -> Vec<(LabelId, f64)> {
        let q = tfidf_transform(text, &self.vocab, false);
        let scored = self
            .ids
            .iter()
            .cloned()
            .zip(self.index.scores(&q))
            .collect();
        rank(scored, k)
    }

    pub fn predict(
        &self,
        report: &VulnerabilityReport,
        enhancer: &Enhancer,
        k: usize,
    ) -> Vec<(LabelId, f64)> {
        self.predict_text(&enhancer.enhance(report).0, k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn id(s: &str) -> LabelId {
        LabelId::parse(s).unwrap()
    }

    fn report(desc: &str, cpe: &[&str]) -> VulnerabilityReport {
        VulnerabilityReport {
            id: "r".into(),
            published: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            description: desc.into(),
            references: Vec::new(),
            cpe_entries: cpe.iter().map(|s| s.to_string()).collect(),
            labels: Default::default(),
        }
    }

    #[test]
    fn exact_match_counts() {
        let universe = [id("poppler"), id("evince"), id("okular")];
        let m = ExactMatcher::new(universe.iter(), true);
        let cfg = EnhanceConfig::default();
        let got = m.predict(&report("Poppler poppler evince popplers", &[]), &cfg, 3);
        assert_eq!(got, [(id("poppler"), 2.0), (id("evince"), 1.0)]);
        assert!(m.predict(&report("nothing here", &[]), &cfg, 3).is_empty());
    }

    #[test]
    fn exact_match_multiword_and_versions() {
        let universe = [id("spring framework"), id("lib@1.0"), id("lib")];
        let m = ExactMatcher::new(universe.iter(), false);
        let got = m.predict(
            &report("Spring Framework uses lib.", &[]),
            &EnhanceConfig::default(),
            5,
        );
        assert_eq!(
            got,
            [
                (id("lib"), 1.0),
                (id("lib@1.0"), 1.0),
                (id("spring_framework"), 1.0)
            ]
        );
    }

    #[test]
    fn cpe_fields() {
        let r = report(
            "",
            &[
                "cpe:2.3:a:poppler:poppler:0.70.0:*:*:*:*:*:*:*",
                "cpe:2.3:a:gnome:evince:*:*:*:*:*:*:*:*",
                "garbage",
                "cpe:2.3:a:poppler:poppler:0.70.0:*:*:*:*:*:*:*",
            ],
        );
        assert_eq!(
            baseline_cpe(&r),
            [id("poppler"), id("poppler@0.70.0"), id("evince")]
        );
    }

    #[test]
    fn ir_identical_text_ranks_first() {
        let mut a = Label::new(id("tika"));
        a.feature_text = "tika parser".into();
        let mut b = Label::new(id("zlib"));
        b.feature_text = "zlib compress".into();
        let cfg = EnhanceConfig::default();
        let ir = IrBaseline::fit(&["pars compress".into()], &[a, b], &cfg, 2).unwrap();
        let text = label_match_text(&ir_label("tika", "tika parser"), &cfg);
        let got = ir.predict_text(&text, 2);
        assert_eq!(got[0].0, id("tika"));
        assert!((got[0].1 - 1.0).abs() < 1e-12);
        let none = ir.predict_text("unrelated", 2);
        assert_eq!(none, [(id("tika"), 0.0), (id("zlib"), 0.0)]);
    }

    fn ir_label(name: &str, text: &str) -> Label {
        let mut l = Label::new(id(name));
        l.feature_text = text.into();
        l
    }
}
