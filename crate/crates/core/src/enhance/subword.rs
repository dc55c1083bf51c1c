use std::collections::BTreeSet;

use crate::corpus::Label;

const DELIMITERS: &[char] = &['.', '-', '_', ':', '/', '@', '+'];

/// Splits on punctuation delimiters and letter/digit boundaries.
pub fn delimiter_split(name: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut prev_digit: Option<bool> = None;
    for c in name.chars() {
        if DELIMITERS.contains(&c) || c.is_whitespace() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            prev_digit = None;
            continue;
        }
        let digit = c.is_ascii_digit();
        if prev_digit.is_some_and(|p| p != digit) && !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
        prev_digit = Some(digit);
        cur.push(c);
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Splits `fooBar`/`XMLParser` style boundaries, lowercasing the pieces.
pub fn camel_split(token: &str) -> Vec<String> {
    let chars: Vec<char> = token.chars().collect();
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..chars.len() {
        let (prev, cur) = (chars[i - 1], chars[i]);
        let next_lower = chars.get(i + 1).is_some_and(|c| c.is_lowercase());
        let boundary = (prev.is_lowercase() && cur.is_uppercase())
            || (prev.is_uppercase() && cur.is_uppercase() && next_lower);
        if boundary {
            out.push(chars[start..i].iter().collect::<String>().to_lowercase());
            start = i;
        }
    }
    out.push(chars[start..].iter().collect::<String>().to_lowercase());
    out
}

/// Known sub-words: every alphabetic delimiter-split token (length >= 2)
/// across the label universe.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SubwordDictionary {
    words: BTreeSet<String>,
    max_len: usize,
}

impl SubwordDictionary {
    pub fn from_names<'a>(names: impl IntoIterator<Item = &'a str>) -> Self {
        let mut words = BTreeSet::new();
        for name in names {
            for piece in delimiter_split(name) {
                for w in camel_split(&piece) {
                    if w.len() >= 2 && w.chars().all(|c| c.is_ascii_alphabetic()) {
                        words.insert(w);
                    }
                }
            }
        }
        let max_len = words.iter().map(String::len).max().unwrap_or(0);
        SubwordDictionary { words, max_len }
    }

    pub fn from_labels<'a>(labels: impl IntoIterator<Item = &'a Label>) -> Self {
        Self::from_names(labels.into_iter().map(|l| l.name.as_str()))
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, w: &str) -> bool {
        self.words.contains(w)
    }

    /// Greedy longest-match-first segmentation, left to right, never using
    /// `token` itself as a piece. When no word matches at the current
    /// position the remainder is kept whole. Returns `None` unless the
    /// token splits into at least two pieces.
    pub fn segment(&self, token: &str) -> Option<Vec<String>> {
        if !token.is_ascii() {
            return None;
        }
        let mut pieces = Vec::new();
        let mut pos = 0;
        while pos < token.len() {
            let rest = &token[pos..];
            let longest = (2..=self.max_len.min(rest.len()))
                .rev()
                .map(|n| &rest[..n])
                .find(|w| *w != token && self.words.contains(*w));
            match longest {
                Some(w) => {
                    pieces.push(w.to_string());
                    pos += w.len();
                }
                None => {
                    if pieces.is_empty() {
                        return None;
                    }
                    pieces.push(rest.to_string());
                    break;
                }
            }
        }
        (pieces.len() >= 2).then_some(pieces)
    }
}

/// Builds a label's feature text: the full label id, then its delimiter
/// tokens (so a versioned id contributes the bare library name and the
/// version components), camelCase pieces and dictionary segmentations.
/// Duplicates are kept.
pub fn split_label_subwords(label: &Label, dict: &SubwordDictionary) -> String {
    let mut out = vec![label.id.to_string()];
    let delim = delimiter_split(label.id.as_str());
    if delim.len() > 1 {
        out.extend(delim.iter().cloned());
    }
    for token in &delim {
        let camel = camel_split(token);
        if camel.len() > 1 {
            out.extend(camel.iter().cloned());
        }
        for piece in &camel {
            if let Some(seg) = dict.segment(piece) {
                out.extend(seg);
            }
        }
    }
    out.join(" ")
}

/// Feature text without sub-word enrichment: the label id and its plain
/// delimiter tokens.
pub fn plain_label_text(label: &Label) -> String {
    let mut out = vec![label.id.to_string()];
    let delim = delimiter_split(label.id.as_str());
    if delim.len() > 1 {
        out.extend(delim);
    }
    out.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::LabelId;

    fn label(id: &str) -> Label {
        Label::new(LabelId::parse(id).unwrap())
    }

    #[test]
    fn delimiter_and_digit_boundaries() {
        assert_eq!(
            delimiter_split("org.apache.tika"),
            ["org", "apache", "tika"]
        );
        assert_eq!(delimiter_split("log4j-core"), ["log", "4", "j", "core"]);
        assert_eq!(delimiter_split("a::b//c"), ["a", "b", "c"]);
    }

    #[test]
    fn camel_boundaries() {
        assert_eq!(camel_split("springFramework"), ["spring", "framework"]);
        assert_eq!(camel_split("XMLParser"), ["xml", "parser"]);
        assert_eq!(camel_split("plain"), ["plain"]);
    }

    #[test]
    fn delimiter_only_label() {
        let l = label("org.apache.tika");
        let dict = SubwordDictionary::from_labels([&l]);
        assert_eq!(
            split_label_subwords(&l, &dict),
            "org.apache.tika org apache tika"
        );
    }

    #[test]
    fn dictionary_splits_compound_names() {
        let dict = SubwordDictionary::from_names(["py", "openssl", "pyopenssl"]);
        let text = split_label_subwords(&label("pyopenssl"), &dict);
        assert_eq!(text, "pyopenssl py openssl");

        let dict =
            SubwordDictionary::from_names(["org", "spring", "framework", "org.springframework"]);
        let text = split_label_subwords(&label("org.springframework"), &dict);
        assert!(text.starts_with("org.springframework "));
        assert!(text.contains("spring framework"), "{text}");
    }

    #[test]
    fn remainder_kept_whole() {
        let dict = SubwordDictionary::from_names(["spring", "framework"]);
        assert_eq!(
            dict.segment("springframeworkx").unwrap(),
            ["spring", "framework", "x"]
        );
        assert_eq!(dict.segment("xspring"), None);
        assert_eq!(dict.segment("spring"), None);
    }

    #[test]
    fn versioned_label_starts_with_id() {
        let l = label("org.apache.tika@1.2");
        let dict = SubwordDictionary::from_labels([&l]);
        assert_eq!(
            split_label_subwords(&l, &dict),
            "org.apache.tika@1.2 org apache tika 1 2"
        );
        assert_eq!(plain_label_text(&label("pyopenssl")), "pyopenssl");
        assert_eq!(
            plain_label_text(&label("pyopenssl@1.0")),
            "pyopenssl@1.0 pyopenssl 1 0"
        );
    }
}
