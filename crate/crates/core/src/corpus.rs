//! Ingestion, cleaning and splitting of decision texts.
//!
//! Cleaning removes everything that would leak the label into the features:
//! digits, the words "month(s)"/"year(s)", and detention phrases that name the
//! sentence type. The result is a lowercase, accent-free, space-joined token
//! stream that the n-gram featurizer consumes directly.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::rng;

/// Bundled English stop-word list, one token per line.
pub const DEFAULT_STOP_WORDS: &str = include_str!("../data/stopwords_en_v1.txt");
pub const DEFAULT_STOP_WORDS_VERSION: &str = "en-v1";

pub const DEFAULT_LEAKAGE_PHRASES: [&str; 3] = [
    "home detention",
    "community detention",
    "preventative detention",
];

const TIME_WORDS: [&str; 4] = ["month", "months", "year", "years"];

/// Upper bound of the assault-domain label range: 14.5 years.
pub const ASSAULT_MAX_MONTHS: f64 = 174.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningConfig {
    pub stop_words: BTreeSet<String>,
    pub leakage_phrases: Vec<String>,
    /// Enforce the 0..=174 month label range.
    pub assault_domain: bool,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        CleaningConfig {
            stop_words: parse_stop_words(DEFAULT_STOP_WORDS),
            leakage_phrases: DEFAULT_LEAKAGE_PHRASES
                .iter()
                .map(|s| s.to_string())
                .collect(),
            assault_domain: false,
        }
    }
}

impl CleaningConfig {
    pub fn clean(&self, raw: &str) -> String {
        clean_text(raw, &self.stop_words, &self.leakage_phrases)
    }

    /// SHA-256 over the sorted stop words, newline-terminated.
    pub fn stop_words_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for w in &self.stop_words {
            hasher.update(w.as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }
}

pub fn parse_stop_words(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

pub fn read_stop_words(path: &Path) -> Result<BTreeSet<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_stop_words(&text))
}

/// Lowercase, strip accents, and split on anything that is not alphanumeric.
fn normalize_tokens(raw: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in raw.to_lowercase().nfd().filter(|c| !is_combining_mark(*c)) {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

fn is_numeric_token(token: &str) -> bool {
    token.chars().all(char::is_numeric)
}

/// Removes every contiguous occurrence of each phrase until none is left.
/// Removing one occurrence can splice a new one together, hence the loop.
fn remove_phrases(tokens: &mut Vec<String>, phrases: &[Vec<String>]) {
    loop {
        let mut changed = false;
        for phrase in phrases.iter().filter(|p| !p.is_empty()) {
            let mut out = Vec::with_capacity(tokens.len());
            let mut i = 0;
            while i < tokens.len() {
                if tokens[i..].starts_with(phrase) {
                    i += phrase.len();
                    changed = true;
                } else {
                    out.push(std::mem::take(&mut tokens[i]));
                    i += 1;
                }
            }
            *tokens = out;
        }
        if !changed {
            break;
        }
    }
}

/// Applies the anti-leakage cleaning rules and returns space-joined tokens.
///
/// Leakage phrases are matched on the normalized token stream, so a phrase
/// split by punctuation or a line break is still caught. They are matched
/// again after stop-word removal, which keeps the function idempotent.
pub fn clean_text<S: AsRef<str>>(
    raw: &str,
    stop_words: &BTreeSet<String>,
    leakage_phrases: &[S],
) -> String {
    let phrases: Vec<Vec<String>> = leakage_phrases
        .iter()
        .map(|p| normalize_tokens(p.as_ref()))
        .collect();
    let mut tokens = normalize_tokens(raw);
    remove_phrases(&mut tokens, &phrases);
    tokens.retain(|t| {
        !is_numeric_token(t) && !TIME_WORDS.contains(&t.as_str()) && !stop_words.contains(t)
    });
    remove_phrases(&mut tokens, &phrases);
    tokens.join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDocument {
    pub id: String,
    pub cleaned_text: String,
    pub sentence_months: f64,
}

/// Cleans and labels `documents`, preserving input order.
///
/// Every rejected document is reported together in [`CorpusErrors`], not
/// just the first one.
pub fn load_corpus(
    documents: &[RawDocument],
    labels: &BTreeMap<String, f64>,
    config: &CleaningConfig,
) -> Result<Vec<LabeledDocument>, CorpusErrors> {
    let mut seen = HashSet::new();
    let mut errors = Vec::new();
    let mut out = Vec::with_capacity(documents.len());
    for doc in documents {
        if doc.id.is_empty() {
            errors.push(Error::EmptyDocument("<empty id>".into()));
            continue;
        }
        if !seen.insert(doc.id.as_str()) {
            errors.push(Error::DuplicateId(doc.id.clone()));
            continue;
        }
        let Some(&months) = labels.get(&doc.id) else {
            errors.push(Error::MissingLabel(doc.id.clone()));
            continue;
        };
        if !months.is_finite() || months < 0.0 {
            errors.push(Error::InvalidLabel {
                id: doc.id.clone(),
                value: months,
            });
            continue;
        }
        if config.assault_domain && months > ASSAULT_MAX_MONTHS {
            errors.push(Error::LabelOutOfRange {
                id: doc.id.clone(),
                value: months,
            });
            continue;
        }
        if doc.text.trim().is_empty() {
            errors.push(Error::EmptyDocument(doc.id.clone()));
            continue;
        }
        let cleaned = config.clean(&doc.text);
        if cleaned.is_empty() {
            errors.push(Error::EmptyAfterCleaning(doc.id.clone()));
            continue;
        }
        out.push(LabeledDocument {
            id: doc.id.clone(),
            cleaned_text: cleaned,
            sentence_months: months,
        });
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(CorpusErrors(errors))
    }
}

/// All per-document rejections from one [`load_corpus`] call.
#[derive(Debug)]
pub struct CorpusErrors(pub Vec<Error>);

impl std::fmt::Display for CorpusErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} document(s) rejected", self.0.len())?;
        for e in &self.0 {
            write!(f, "\n  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for CorpusErrors {}

/// Reads every `*.txt` file in `dir` as one document, sorted by id.
pub fn read_corpus_dir(dir: &Path) -> Result<Vec<RawDocument>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut docs = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("txt") || !path.is_file() {
            continue;
        }
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::parse(&path, "file name is not valid UTF-8"))?
            .to_string();
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        docs.push(RawDocument { id, text });
    }
    docs.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(docs)
}

#[derive(Debug, Deserialize)]
struct LabelRow {
    id: String,
    sentence_months: f64,
}

/// Reads a `id,sentence_months` CSV.
pub fn read_labels(path: &Path) -> Result<BTreeMap<String, f64>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path, format!("{other:?}")),
    })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(path, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["id", "sentence_months"] {
        return Err(Error::parse(path, "expected header `id,sentence_months`"));
    }
    let mut labels = BTreeMap::new();
    for row in reader.deserialize::<LabelRow>() {
        let row = row.map_err(|e| Error::parse(path, e.to_string()))?;
        if labels.insert(row.id.clone(), row.sentence_months).is_some() {
            return Err(Error::parse(
                path,
                format!("duplicate label for `{}`", row.id),
            ));
        }
    }
    Ok(labels)
}

pub fn write_labels(path: &Path, labels: &[(String, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::parse(path, e.to_string()))?;
    w.write_record(["id", "sentence_months"])
        .and_then(|_| {
            labels
                .iter()
                .try_for_each(|(id, m)| w.write_record([id.as_str(), &m.to_string()]))
        })
        .and_then(|_| w.flush().map_err(Into::into))
        .map_err(|e| Error::parse(path, e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.65,
            val_fraction: 0.10,
            test_fraction: 0.25,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let fr = [self.train_fraction, self.val_fraction, self.test_fraction];
        if fr.iter().any(|f| !f.is_finite() || *f <= 0.0) {
            return Err(Error::InvalidSplit(format!(
                "fractions must be positive, got {fr:?}"
            )));
        }
        let sum: f64 = fr.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSplit(format!(
                "fractions sum to {sum}, not 1"
            )));
        }
        Ok(())
    }

    /// `(train, val, test)` sizes for a corpus of `n` documents.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let n_test = (self.test_fraction * n as f64).floor() as usize;
        let n_val = (self.val_fraction * n as f64).floor() as usize;
        (n - n_test - n_val, n_val, n_test)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSplit {
    pub train: Vec<LabeledDocument>,
    pub val: Vec<LabeledDocument>,
    pub test: Vec<LabeledDocument>,
}

pub const MIN_SPLIT_DOCS: usize = 10;

/// Shuffles with the seeded generator, then deals test, val and train in
/// that order from the front of the shuffled sequence.
pub fn split_corpus(corpus: &[LabeledDocument], spec: &SplitSpec) -> Result<CorpusSplit> {
    spec.validate()?;
    if corpus.len() < MIN_SPLIT_DOCS {
        return Err(Error::CorpusTooSmall {
            got: corpus.len(),
            min: MIN_SPLIT_DOCS,
        });
    }
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    rng::shuffle(&mut rng::seeded(spec.seed), &mut order);
    let (_, n_val, n_test) = spec.sizes(corpus.len());
    let take = |range: &[usize]| range.iter().map(|&i| corpus[i].clone()).collect::<Vec<_>>();
    Ok(CorpusSplit {
        test: take(&order[..n_test]),
        val: take(&order[n_test..n_test + n_val]),
        train: take(&order[n_test + n_val..]),
    })
}
