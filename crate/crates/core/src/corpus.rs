//! Vulnerability report data model, dataset ingestion, chronological
//! splitting and the seen/unseen label census.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::{self, Write as _};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::enhance::ReferenceDoc;
use crate::error::{Error, Result};

/// Canonical library identifier: `name` or `name@version`.
///
/// Names are lowercased, trimmed, and internal whitespace runs collapse to a
/// single underscore. The separator is the last `@` that is not the first
/// character, so scoped package names such as `@types/node` survive.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LabelId(String);

fn normalize_part(raw: &str) -> String {
    raw.trim()
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join("_")
}

impl LabelId {
    pub fn parse(raw: &str) -> Result<Self> {
        let trimmed = raw.trim();
        match trimmed.rfind('@').filter(|&i| i > 0) {
            Some(at) => Self::from_parts(&trimmed[..at], Some(&trimmed[at + 1..])),
            None => Self::from_parts(trimmed, None),
        }
    }

    pub fn from_parts(name: &str, version: Option<&str>) -> Result<Self> {
        let name = normalize_part(name);
        if name.is_empty() {
            return Err(Error::Validation("label name is empty".into()));
        }
        match version.map(normalize_part) {
            Some(v) if v.is_empty() => Err(Error::Validation(format!(
                "label {name:?} has an empty version qualifier"
            ))),
            Some(v) => Ok(LabelId(format!("{name}@{v}"))),
            None => Ok(LabelId(name)),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn split_at(&self) -> Option<usize> {
        self.0.rfind('@').filter(|&i| i > 0)
    }

    pub fn name(&self) -> &str {
        match self.split_at() {
            Some(at) => &self.0[..at],
            None => &self.0,
        }
    }

    pub fn version(&self) -> Option<&str> {
        self.split_at().map(|at| &self.0[at + 1..])
    }
}

impl TryFrom<String> for LabelId {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        LabelId::parse(&value)
    }
}

impl From<LabelId> for String {
    fn from(value: LabelId) -> Self {
        value.0
    }
}

impl fmt::Display for LabelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::borrow::Borrow<str> for LabelId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

/// A library label together with its derived feature text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Label {
    pub id: LabelId,
    pub name: String,
    pub version: Option<String>,
    /// Filled in by [`crate::enhance::split_label_subwords`].
    pub feature_text: String,
}

impl Label {
    pub fn new(id: LabelId) -> Self {
        Label {
            name: id.name().to_string(),
            version: id.version().map(str::to_string),
            feature_text: String::new(),
            id,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VulnerabilityReport {
    pub id: String,
    pub published: NaiveDate,
    pub description: String,
    pub references: Vec<ReferenceDoc>,
    pub cpe_entries: Vec<String>,
    pub labels: BTreeSet<LabelId>,
}

impl VulnerabilityReport {
    fn sort_key(&self) -> (NaiveDate, &str) {
        (self.published, &self.id)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LoadMode {
    /// Every report must carry at least one ground-truth label.
    Labeled,
    /// Reports without labels are kept (prediction-only input).
    Unlabeled,
}

/// A set of reports plus the label universe they draw from.
///
/// Reports are kept sorted by `(published, id)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub reports: Vec<VulnerabilityReport>,
    pub labels: BTreeMap<LabelId, Label>,
}

impl Dataset {
    /// Builds a dataset, adding every referenced label to the universe and
    /// checking id uniqueness.
    pub fn new(
        mut reports: Vec<VulnerabilityReport>,
        extra_labels: impl IntoIterator<Item = LabelId>,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &reports {
            if r.id.trim().is_empty() {
                return Err(Error::Validation("report with empty id".into()));
            }
            if !seen.insert(r.id.as_str()) {
                return Err(Error::Validation(format!("duplicate report id {}", r.id)));
            }
        }
        let mut labels = BTreeMap::new();
        for id in extra_labels
            .into_iter()
            .chain(reports.iter().flat_map(|r| r.labels.iter().cloned()))
        {
            labels.entry(id.clone()).or_insert_with(|| Label::new(id));
        }
        reports.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        Ok(Dataset { reports, labels })
    }

    pub fn len(&self) -> usize {
        self.reports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reports.is_empty()
    }

    /// Labels that occur in at least one report of this dataset.
    pub fn observed_labels(&self) -> BTreeSet<LabelId> {
        self.reports
            .iter()
            .flat_map(|r| r.labels.iter().cloned())
            .collect()
    }

    /// A dataset over `reports` sharing this dataset's label universe.
    pub fn with_reports(&self, reports: Vec<VulnerabilityReport>) -> Dataset {
        Dataset {
            reports,
            labels: self.labels.clone(),
        }
    }

    pub fn report(&self, id: &str) -> Option<&VulnerabilityReport> {
        self.reports.iter().find(|r| r.id == id)
    }
}

#[derive(Deserialize)]
struct RawReference {
    url: String,
    #[serde(default)]
    title: Option<String>,
    #[serde(default)]
    text: Option<String>,
}

#[derive(Deserialize)]
struct RawReport {
    id: String,
    #[serde(default)]
    published: Option<String>,
    #[serde(default)]
    description: String,
    #[serde(default)]
    references: Vec<RawReference>,
    #[serde(default)]
    cpe: Vec<String>,
    #[serde(default)]
    labels: Vec<String>,
}

#[derive(Serialize)]
struct RawReferenceOut<'a> {
    url: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    title: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    text: Option<&'a str>,
}

#[derive(Serialize)]
struct RawReportOut<'a> {
    id: &'a str,
    published: String,
    description: &'a str,
    references: Vec<RawReferenceOut<'a>>,
    cpe: &'a [String],
    labels: Vec<&'a str>,
}

/// Parses an ISO-8601 date, accepting a trailing time component.
pub fn parse_published(raw: &str) -> Option<NaiveDate> {
    let raw = raw.trim();
    let date_part = match raw.char_indices().nth(10) {
        Some((i, 'T' | 't' | ' ')) => &raw[..i],
        Some(_) => return None,
        None => raw,
    };
    NaiveDate::parse_from_str(date_part, "%Y-%m-%d").ok()
}

fn report_from_raw(raw: RawReport, mode: LoadMode) -> Result<VulnerabilityReport> {
    let id = raw.id.trim().to_string();
    if id.is_empty() {
        return Err(Error::Validation("report with empty id".into()));
    }
    let published = match raw.published.as_deref() {
        None | Some("") => {
            return Err(Error::Validation(format!(
                "report {id} has no published date"
            )))
        }
        Some(p) => parse_published(p).ok_or_else(|| {
            Error::Validation(format!("report {id} has an invalid published date {p:?}"))
        })?,
    };
    let labels = raw
        .labels
        .iter()
        .map(|l| LabelId::parse(l))
        .collect::<Result<BTreeSet<_>>>()?;
    if mode == LoadMode::Labeled && labels.is_empty() {
        return Err(Error::Validation(format!("report {id} has no labels")));
    }
    Ok(VulnerabilityReport {
        id,
        published,
        description: raw.description,
        references: raw
            .references
            .into_iter()
            .map(|r| ReferenceDoc::new(r.url, r.title, r.text))
            .collect(),
        cpe_entries: raw.cpe,
        labels,
    })
}

/// Loads a JSON-Lines dataset file. Blank lines are ignored.
pub fn load_dataset(path: &Path, mode: LoadMode) -> Result<Dataset> {
    load_dataset_with_labels(path, None, mode)
}

/// Loads a dataset and an optional label-universe file (one canonical id
/// per line, `#` comments allowed).
pub fn load_dataset_with_labels(
    path: &Path,
    labels_path: Option<&Path>,
    mode: LoadMode,
) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reports = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawReport = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            message: e.to_string(),
        })?;
        let report = report_from_raw(raw, mode).map_err(|e| match e {
            Error::Validation(m) => Error::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                message: m,
            },
            other => other,
        })?;
        reports.push(report);
    }
    let extra = match labels_path {
        Some(p) => load_label_universe(p)?,
        None => Vec::new(),
    };
    Dataset::new(reports, extra)
}

pub fn load_label_universe(path: &Path) -> Result<Vec<LabelId>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(n, l)| {
            LabelId::parse(l).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn write_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for r in &dataset.reports {
        let raw = RawReportOut {
            id: &r.id,
            published: r.published.format("%Y-%m-%d").to_string(),
            description: &r.description,
            references: r
                .references
                .iter()
                .map(|d| RawReferenceOut {
                    url: &d.url,
                    title: d.title.as_deref(),
                    text: d.text.as_deref(),
                })
                .collect(),
            cpe: &r.cpe_entries,
            labels: r.labels.iter().map(LabelId::as_str).collect(),
        };
        serde_json::to_writer(&mut out, &raw)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_label_universe(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut text = String::new();
    for id in dataset.labels.keys() {
        text.push_str(id.as_str());
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// How to cut a dataset into train / validation / test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitSpec {
    /// Proportional by report count, e.g. `[3, 1, 2]`.
    Ratio([u32; 3]),
    /// Calendar-year boundaries: train is `year <= train_last`, validation
    /// is `year <= validation_last`, test is everything later.
    Years {
        train_last: i32,
        validation_last: i32,
    },
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec::Ratio([3, 1, 2])
    }
}

impl std::str::FromStr for SplitSpec {
    type Err = Error;

    /// Accepts `ratio:3:1:2` or `years:2016:2017`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = || Error::Config(format!("invalid split spec {s:?}"));
        match parts.as_slice() {
            ["ratio", a, b, c] => {
                let r = [a, b, c].map(|v| v.parse::<u32>());
                match r {
                    [Ok(a), Ok(b), Ok(c)] if a + b + c > 0 => Ok(SplitSpec::Ratio([a, b, c])),
                    _ => Err(bad()),
                }
            }
            ["years", t, v] => {
                let t = t.parse().map_err(|_| bad())?;
                let v = v.parse().map_err(|_| bad())?;
                if v < t {
                    return Err(bad());
                }
                Ok(SplitSpec::Years {
                    train_last: t,
                    validation_last: v,
                })
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for SplitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitSpec::Ratio([a, b, c]) => write!(f, "ratio:{a}:{b}:{c}"),
            SplitSpec::Years {
                train_last,
                validation_last,
            } => write!(f, "years:{train_last}:{validation_last}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChronologicalSplit {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
}

impl ChronologicalSplit {
    pub fn parts(&self) -> [(&'static str, &Dataset); 3] {
        [
            ("train", &self.train),
            ("validation", &self.validation),
            ("test", &self.test),
        ]
    }
}

fn extend_past_ties(reports: &[VulnerabilityReport], mut cut: usize) -> usize {
    while cut > 0 && cut < reports.len() && reports[cut].published == reports[cut - 1].published {
        cut += 1;
    }
    cut
}

/// Splits `dataset` chronologically. A ratio cut that lands inside a run of
/// same-date reports moves forward to the end of that run, so the earlier
/// split absorbs the whole run.
pub fn chronological_split(dataset: &Dataset, spec: SplitSpec) -> Result<ChronologicalSplit> {
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let mut reports = dataset.reports.clone();
    reports.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    let n = reports.len();
    let (c1, c2) = match spec {
        SplitSpec::Ratio([a, b, c]) => {
            let total = (a + b + c) as usize;
            if total == 0 {
                return Err(Error::Config("split ratio sums to zero".into()));
            }
            let c1 = extend_past_ties(&reports, n * a as usize / total);
            let c2 = extend_past_ties(&reports, (n * (a + b) as usize / total).max(c1));
            (c1, c2)
        }
        SplitSpec::Years {
            train_last,
            validation_last,
        } => {
            let c1 = reports.partition_point(|r| r.published.year() <= train_last);
            let c2 = reports.partition_point(|r| r.published.year() <= validation_last);
            (c1, c2)
        }
    };
    let test = reports.split_off(c2);
    let validation = reports.split_off(c1);
    if validation.is_empty() || test.is_empty() {
        log::warn!(
            "chronological split left {} validation and {} test reports",
            validation.len(),
            test.len()
        );
    }
    Ok(ChronologicalSplit {
        train: dataset.with_reports(reports),
        validation: dataset.with_reports(validation),
        test: dataset.with_reports(test),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Granularity {
    PerYear,
    PerSplit,
}

/// Seen/unseen statistics for one period.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodCensus {
    pub period: String,
    pub total_labels: usize,
    pub seen_labels: usize,
    pub unseen_labels: usize,
    /// Reports carrying at least one label.
    pub total_reports: usize,
    pub reports_only_seen: usize,
    pub reports_only_unseen: usize,
    pub reports_with_unseen: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusReport {
    pub granularity: Granularity,
    pub periods: Vec<PeriodCensus>,
}

fn pct(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

impl CensusReport {
    pub fn period(&self, name: &str) -> Option<&PeriodCensus> {
        self.periods.iter().find(|p| p.period == name)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<12} {:>7} {:>16} {:>16} {:>8} {:>16} {:>16} {:>16}",
            "period",
            "labels",
            "seen",
            "unseen",
            "reports",
            "only-seen",
            "only-unseen",
            "with-unseen"
        );
        for p in &self.periods {
            let cell = |v: usize, of: usize| format!("{v} ({:.1}%)", pct(v, of));
            let _ = writeln!(
                out,
                "{:<12} {:>7} {:>16} {:>16} {:>8} {:>16} {:>16} {:>16}",
                p.period,
                p.total_labels,
                cell(p.seen_labels, p.total_labels),
                cell(p.unseen_labels, p.total_labels),
                p.total_reports,
                cell(p.reports_only_seen, p.total_reports),
                cell(p.reports_only_unseen, p.total_reports),
                cell(p.reports_with_unseen, p.total_reports),
            );
        }
        out
    }
}

impl PeriodCensus {
    pub fn unseen_share(&self) -> f64 {
        pct(self.unseen_labels, self.total_labels)
    }
}

/// Counts, per period, labels that never occurred in a strictly earlier
/// period, plus the report-level breakdown.
pub fn unseen_census(split: &ChronologicalSplit, granularity: Granularity) -> CensusReport {
    let mut periods: Vec<(String, Vec<&VulnerabilityReport>)> = Vec::new();
    match granularity {
        Granularity::PerSplit => {
            for (name, part) in split.parts() {
                periods.push((name.to_string(), part.reports.iter().collect()));
            }
        }
        Granularity::PerYear => {
            let mut by_year: BTreeMap<i32, Vec<&VulnerabilityReport>> = BTreeMap::new();
            for (_, part) in split.parts() {
                for r in &part.reports {
                    by_year.entry(r.published.year()).or_default().push(r);
                }
            }
            periods.extend(by_year.into_iter().map(|(y, rs)| (y.to_string(), rs)));
        }
    }

    let mut history: HashSet<&LabelId> = HashSet::new();
    let mut out = Vec::with_capacity(periods.len());
    for (name, reports) in &periods {
        let labels: BTreeSet<&LabelId> = reports.iter().flat_map(|r| r.labels.iter()).collect();
        let seen_labels = labels.iter().filter(|l| history.contains(*l)).count();
        let mut census = PeriodCensus {
            period: name.clone(),
            total_labels: labels.len(),
            seen_labels,
            unseen_labels: labels.len() - seen_labels,
            total_reports: 0,
            reports_only_seen: 0,
            reports_only_unseen: 0,
            reports_with_unseen: 0,
        };
        for r in reports.iter().filter(|r| !r.labels.is_empty()) {
            census.total_reports += 1;
            let unseen = r.labels.iter().filter(|l| !history.contains(l)).count();
            if unseen == 0 {
                census.reports_only_seen += 1;
            } else {
                census.reports_with_unseen += 1;
                if unseen == r.labels.len() {
                    census.reports_only_unseen += 1;
                }
            }
        }
        history.extend(labels);
        out.push(census);
    }
    CensusReport {
        granularity,
        periods: out,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(id: &str, date: &str, labels: &[&str]) -> VulnerabilityReport {
        VulnerabilityReport {
            id: id.into(),
            published: parse_published(date).unwrap(),
            description: String::new(),
            references: vec![],
            cpe_entries: vec![],
            labels: labels.iter().map(|l| LabelId::parse(l).unwrap()).collect(),
        }
    }

    #[test]
    fn label_id_canonical_form() {
        let id = LabelId::parse("  Apache  Tika @ 1.2 ").unwrap();
        assert_eq!(id.as_str(), "apache_tika@1.2");
        assert_eq!(id.name(), "apache_tika");
        assert_eq!(id.version(), Some("1.2"));
        let scoped = LabelId::parse("@types/node").unwrap();
        assert_eq!(scoped.name(), "@types/node");
        assert_eq!(scoped.version(), None);
        assert!(LabelId::parse("   ").is_err());
        assert!(LabelId::parse("lib@").is_err());
    }

    #[test]
    fn published_accepts_datetimes() {
        assert_eq!(
            parse_published("2017-03-04T10:00Z"),
            NaiveDate::from_ymd_opt(2017, 3, 4)
        );
        assert!(parse_published("2017-13-01").is_none());
        assert!(parse_published("20170304x").is_none());
    }

    #[test]
    fn ratio_split_on_distinct_dates() {
        let reports = (1..=6)
            .map(|d| report(&format!("CVE-{d}"), &format!("2017-01-0{d}"), &["x"]))
            .collect();
        let ds = Dataset::new(reports, []).unwrap();
        let split = chronological_split(&ds, SplitSpec::Ratio([3, 1, 2])).unwrap();
        let ids = |d: &Dataset| d.reports.iter().map(|r| r.id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&split.train), ["CVE-1", "CVE-2", "CVE-3"]);
        assert_eq!(ids(&split.validation), ["CVE-4"]);
        assert_eq!(ids(&split.test), ["CVE-5", "CVE-6"]);
    }

    #[test]
    fn ratio_split_same_date_goes_to_train() {
        let reports = (1..=6)
            .map(|d| report(&format!("CVE-{d}"), "2017-01-01", &["x"]))
            .collect();
        let ds = Dataset::new(reports, []).unwrap();
        let split = chronological_split(&ds, SplitSpec::Ratio([3, 1, 2])).unwrap();
        assert_eq!(split.train.len(), 6);
        assert!(split.validation.is_empty());
        assert!(split.test.is_empty());
    }

    #[test]
    fn ratio_cut_extends_through_tie_run() {
        let dates = [
            "2017-01-01",
            "2017-01-02",
            "2017-01-03",
            "2017-01-03",
            "2017-01-04",
            "2017-01-05",
        ];
        let reports = dates
            .iter()
            .enumerate()
            .map(|(i, d)| report(&format!("CVE-{i}"), d, &["x"]))
            .collect();
        let ds = Dataset::new(reports, []).unwrap();
        let split = chronological_split(&ds, SplitSpec::Ratio([3, 1, 2])).unwrap();
        assert_eq!(split.train.len(), 4);
        assert_eq!(split.validation.len(), 0);
        assert_eq!(split.test.len(), 2);
    }

    #[test]
    fn year_split() {
        let ds = Dataset::new(
            vec![
                report("a", "2015-05-01", &["x"]),
                report("b", "2016-12-31", &["x"]),
                report("c", "2017-01-01", &["x"]),
                report("d", "2019-01-01", &["x"]),
            ],
            [],
        )
        .unwrap();
        let split = chronological_split(&ds, "years:2016:2017".parse().unwrap()).unwrap();
        assert_eq!(
            (split.train.len(), split.validation.len(), split.test.len()),
            (2, 1, 1)
        );
    }

    #[test]
    fn empty_dataset_rejected() {
        assert!(chronological_split(&Dataset::default(), SplitSpec::default()).is_err());
    }

    #[test]
    fn split_spec_parsing() {
        assert_eq!(
            "ratio:3:1:2".parse::<SplitSpec>().unwrap(),
            SplitSpec::Ratio([3, 1, 2])
        );
        assert!("ratio:0:0:0".parse::<SplitSpec>().is_err());
        assert!("years:2017:2016".parse::<SplitSpec>().is_err());
        assert_eq!(SplitSpec::Ratio([3, 1, 2]).to_string(), "ratio:3:1:2");
    }

    #[test]
    fn census_two_label_case() {
        let base = Dataset::new(
            vec![
                report("A", "2016-01-01", &["x"]),
                report("B", "2018-01-01", &["x"]),
                report("C", "2018-01-02", &["y"]),
            ],
            [],
        )
        .unwrap();
        let split = ChronologicalSplit {
            train: base.with_reports(vec![base.reports[0].clone()]),
            validation: base.with_reports(vec![]),
            test: base.with_reports(base.reports[1..].to_vec()),
        };
        let census = unseen_census(&split, Granularity::PerSplit);
        let test = census.period("test").unwrap();
        assert_eq!((test.seen_labels, test.unseen_labels), (1, 1));
        assert_eq!(test.reports_only_unseen, 1);
        assert_eq!(test.reports_only_seen, 1);
        assert_eq!(test.reports_with_unseen, 1);

        let by_year = unseen_census(&split, Granularity::PerYear);
        assert_eq!(by_year.periods.len(), 2);
        assert_eq!(by_year.period("2018").unwrap().unseen_labels, 1);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = Dataset::new(
            vec![
                report("CVE-1", "2017-01-01", &["x"]),
                report("CVE-1", "2017-01-02", &["y"]),
            ],
            [],
        )
        .unwrap_err();
        assert!(err.to_string().contains("CVE-1"));
    }
}
