//! Seeded generator for small chronological corpora.
//!
//! Library names are built from a shared pool of prefixes and roots, either
//! delimited (`py-xml`) or fused (`nodexml`), so later libraries share
//! sub-words with earlier ones. Some libraries are labelled with versions,
//! which advance over time, so a report's label is the version current at
//! its date; the rest are labelled by bare name.
//! Descriptions name the library only some of the time; allowlisted
//! references describe it in words, buried in frequent boilerplate;
//! references on other hosts mention unrelated libraries.

use std::collections::BTreeSet;

use chrono::{Duration, NaiveDate};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, LabelId, VulnerabilityReport};
use crate::enhance::{default_stopwords, stem, ReferenceDoc};
use crate::error::{Error, Result};

const PREFIXES: &[&str] = &["lib", "py", "node", "go", "php", "net", "java", "perl"];
const ROOTS: &[&str] = &[
    "xml", "json", "yaml", "zip", "tar", "http", "mail", "font", "png", "gif", "jpeg", "sql",
    "ldap", "ssh", "smtp", "pdf", "svg", "css", "html", "url", "dns", "ftp", "tls", "jwt", "csv",
    "rpc", "markdown", "webp", "tiff", "oauth",
];
const SYLLABLE_HEADS: &[&str] = &[
    "b", "d", "f", "g", "h", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "dr", "gr",
    "kr", "pl", "st", "tr",
];
const VOWELS: &[&str] = &["a", "o", "u", "i"];
const TAILS: &[&str] = &["k", "m", "n", "p", "t", "x", "z", "d", "g", "b"];
const PHRASES: &[&str] = &[
    "allows remote attackers to cause a denial of service",
    "allows attackers to execute arbitrary code",
    "leads to a heap based buffer overflow",
    "permits an out of bounds read",
    "results in a use after free",
    "allows information disclosure via crafted input",
    "contains an integer overflow in the parser",
    "mishandles certain crafted files",
];
const ALLOWED_HOSTS: &[&str] = &[
    "github.com",
    "bugzilla.redhat.com",
    "ubuntu.com",
    "openwall.com",
];
const OTHER_HOSTS: &[&str] = &[
    "example-forum.net",
    "blog.example.org",
    "cve-mirror.example.com",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n_reports: usize,
    pub seed: u64,
    pub start: NaiveDate,
    pub days: i64,
    pub n_libraries: usize,
    /// Days between consecutive releases of a library.
    pub release_interval: i64,
    /// Chance that a description names its library.
    pub name_in_description: f64,
    /// Chance of a second affected library.
    pub second_label: f64,
    /// Share of libraries whose labels carry a version.
    pub versioned_share: f64,
    /// Chance that a report affects a library from one of the few reports
    /// just before it, producing bursts of reports per library.
    pub burst: f64,
    pub burst_window: usize,
    pub boilerplate_words: usize,
    pub boilerplate_per_reference: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_reports: 300,
            seed: 7,
            start: NaiveDate::from_ymd_opt(2015, 1, 1).expect("valid date"),
            days: 6 * 365,
            n_libraries: 40,
            release_interval: 240,
            name_in_description: 0.4,
            second_label: 0.2,
            versioned_share: 0.35,
            burst: 0.5,
            burst_window: 3,
            boilerplate_words: 150,
            boilerplate_per_reference: 60,
        }
    }
}

#[derive(Clone, Debug)]
struct Library {
    name: String,
    words: Vec<&'static str>,
    /// Day offset at which the library first appears.
    intro: i64,
    versioned: bool,
}

fn stable(w: &str, stop: &BTreeSet<String>) -> bool {
    stem(w) == w && !stop.contains(w)
}

/// Pronounceable filler words that survive stemming unchanged and are
/// disjoint from the library vocabulary.
fn filler_words(rng: &mut ChaCha8Rng, n: usize, stop: &BTreeSet<String>) -> Vec<String> {
    let reserved: BTreeSet<&str> = PREFIXES.iter().chain(ROOTS).copied().collect();
    let mut out = BTreeSet::new();
    let mut guard = 0;
    while out.len() < n {
        guard += 1;
        assert!(guard < 100_000, "filler word space exhausted");
        let syllables = rng.random_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(SYLLABLE_HEADS.choose(rng).expect("non-empty"));
            w.push_str(VOWELS.choose(rng).expect("non-empty"));
        }
        w.push_str(TAILS.choose(rng).expect("non-empty"));
        if stable(&w, stop) && !reserved.contains(w.as_str()) {
            out.insert(w);
        }
    }
    let mut v: Vec<String> = out.into_iter().collect();
    // Stable order independent of set iteration.
    v.sort();
    v
}

fn libraries(cfg: &SyntheticConfig, rng: &mut ChaCha8Rng) -> Vec<Library> {
    let mut libs = Vec::new();
    let mut names = BTreeSet::new();
    while libs.len() < cfg.n_libraries {
        let p = *PREFIXES.choose(rng).expect("non-empty");
        let r = *ROOTS.choose(rng).expect("non-empty");
        // Early libraries spell out their parts; later ones tend to be fused.
        let intro = rng.random_range(0..cfg.days * 3 / 4);
        let fused = rng.random_bool((intro as f64 / cfg.days as f64).min(0.9));
        let name = if fused {
            format!("{p}{r}")
        } else {
            format!("{p}-{r}")
        };
        let bare = format!("{p}{r}");
        if names.contains(&name) || names.contains(&bare) || names.contains(&format!("{p}-{r}")) {
            continue;
        }
        names.insert(name.clone());
        libs.push(Library {
            name,
            words: vec![p, r],
            intro,
            versioned: rng.random_bool(cfg.versioned_share),
        });
    }
    libs.sort_by(|a, b| a.intro.cmp(&b.intro).then(a.name.cmp(&b.name)));
    libs
}

fn version_at(lib: &Library, day: i64, interval: i64) -> String {
    let v = (day - lib.intro).max(0) / interval + 1;
    format!("{v}.0")
}

fn reference(
    rng: &mut ChaCha8Rng,
    host: &str,
    lib_words: &[&str],
    lib_name: &str,
    boiler: &[String],
    n_boiler: usize,
) -> ReferenceDoc {
    let mut words: Vec<String> = (0..n_boiler)
        .map(|_| boiler.choose(rng).expect("non-empty").clone())
        .collect();
    for w in lib_words {
        for _ in 0..rng.random_range(2..=4) {
            let at = rng.random_range(0..=words.len());
            words.insert(at, w.to_string());
        }
    }
    let slug: String = lib_name
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .collect();
    ReferenceDoc::new(
        format!(
            "https://{host}/{slug}/issues/{}",
            rng.random_range(1..10_000)
        ),
        Some(format!("{} issue", lib_words.join(" "))),
        Some(words.join(" ")),
    )
}

/// Generates a dataset; identical configs give identical datasets.
pub fn generate(cfg: &SyntheticConfig) -> Result<Dataset> {
    if cfg.n_reports == 0 || cfg.n_libraries == 0 || cfg.days <= 0 || cfg.release_interval <= 0 {
        return Err(Error::Config(
            "synthetic corpus parameters must be positive".into(),
        ));
    }
    if cfg.n_libraries > PREFIXES.len() * ROOTS.len() / 2 {
        return Err(Error::Config(
            "too many synthetic libraries requested".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let stop = default_stopwords();
    let boiler = filler_words(&mut rng, cfg.boilerplate_words, &stop);
    let libs = libraries(cfg, &mut rng);

    let mut days: Vec<i64> = (0..cfg.n_reports)
        .map(|_| rng.random_range(0..cfg.days))
        .collect();
    days.sort_unstable();

    let mut reports = Vec::with_capacity(cfg.n_reports);
    let mut recent_main: Vec<usize> = Vec::new();
    for (n, &day) in days.iter().enumerate() {
        let active: Vec<&Library> = libs.iter().filter(|l| l.intro <= day).collect();
        let pool = if active.is_empty() {
            vec![&libs[0]]
        } else {
            active
        };
        // Newer libraries are more likely to be affected.
        let weights: Vec<f64> = pool
            .iter()
            .map(|l| 1.0 + (l.intro as f64 / cfg.days as f64) * 2.0)
            .collect();
        let pick = |rng: &mut ChaCha8Rng| -> &Library {
            let total: f64 = weights.iter().sum();
            let mut x = rng.random_range(0.0..total);
            for (l, w) in pool.iter().zip(&weights) {
                if x < *w {
                    return l;
                }
                x -= w;
            }
            pool[pool.len() - 1]
        };
        let recent = &recent_main[recent_main.len().saturating_sub(cfg.burst_window)..];
        let main = if !recent.is_empty() && rng.random_bool(cfg.burst) {
            &libs[*recent.choose(&mut rng).expect("non-empty")]
        } else {
            pick(&mut rng)
        };
        recent_main.push(
            libs.iter()
                .position(|l| l.name == main.name)
                .expect("known library"),
        );
        let mut affected = vec![main];
        if rng.random_bool(cfg.second_label) {
            let other = pick(&mut rng);
            if other.name != main.name {
                affected.push(other);
            }
        }

        let mut labels = BTreeSet::new();
        for lib in &affected {
            let v = lib
                .versioned
                .then(|| version_at(lib, day, cfg.release_interval));
            labels.insert(LabelId::from_parts(&lib.name, v.as_deref())?);
        }

        let mut description = String::new();
        if rng.random_bool(cfg.name_in_description) {
            description.push_str(&format!("{} ", main.name));
        } else {
            description.push_str("A component ");
        }
        description.push_str(PHRASES.choose(&mut rng).expect("non-empty"));
        description.push_str(&format!(
            " in {} {}.",
            boiler.choose(&mut rng).expect("non-empty"),
            boiler.choose(&mut rng).expect("non-empty")
        ));

        let mut references = Vec::new();
        for lib in &affected {
            let host = *ALLOWED_HOSTS.choose(&mut rng).expect("non-empty");
            references.push(reference(
                &mut rng,
                host,
                &lib.words,
                &lib.name,
                &boiler,
                cfg.boilerplate_per_reference,
            ));
        }
        // A mirror page naming an unrelated library.
        let decoy = libs.choose(&mut rng).expect("non-empty");
        let host = *OTHER_HOSTS.choose(&mut rng).expect("non-empty");
        references.push(reference(
            &mut rng,
            host,
            &decoy.words,
            &decoy.name,
            &boiler,
            10,
        ));

        let cpe_entries = if rng.random_bool(0.5) {
            vec![format!(
                "cpe:2.3:a:{0}:{0}:{1}:*:*:*:*:*:*:*",
                main.name,
                version_at(main, day, cfg.release_interval)
            )]
        } else {
            Vec::new()
        };

        reports.push(VulnerabilityReport {
            id: format!("SYN-{:05}", n + 1),
            published: cfg.start + Duration::days(day),
            description,
            references,
            cpe_entries,
            labels,
        });
    }
    Dataset::new(reports, std::iter::empty())
}
