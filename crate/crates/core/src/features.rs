//! N-gram extraction, document-frequency pruning and tf-idf weighting.
//!
//! `tf(t, d)` is the count of `t` divided by the total count of all
//! in-vocabulary n-grams of `d` (all orders share one denominator), and
//! `idf(t) = ln((1 + n) / (1 + df(t))) + 1`. No norm is applied to the final
//! vector.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Splits cleaned text on spaces, skipping empty pieces.
pub fn tokenize(cleaned_text: &str) -> Vec<&str> {
    cleaned_text.split(' ').filter(|t| !t.is_empty()).collect()
}

/// All contiguous n-grams for `n_min..=n_max`, grouped by increasing n and
/// left to right within each n. Duplicates are kept.
pub fn extract_ngrams<S: AsRef<str>>(tokens: &[S], n_min: usize, n_max: usize) -> Vec<String> {
    let mut out = Vec::new();
    for n in n_min.max(1)..=n_max {
        if n > tokens.len() {
            break;
        }
        out.extend(
            tokens
                .windows(n)
                .map(|w| w.iter().map(AsRef::as_ref).collect::<Vec<&str>>().join(" ")),
        );
    }
    out
}

fn floor_tolerant(x: f64) -> usize {
    // 0.9 * 30 must give 27, not 26.999...
    (x + 1e-9).floor().max(0.0) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VocabConfig {
    pub min_df: usize,
    pub max_df_ratio: f64,
    pub n_min: usize,
    pub n_max: usize,
}

impl Default for VocabConfig {
    fn default() -> Self {
        VocabConfig {
            min_df: 3,
            max_df_ratio: 0.9,
            n_min: 1,
            n_max: 3,
        }
    }
}

impl VocabConfig {
    pub fn max_df(&self, n_docs: usize) -> usize {
        floor_tolerant(self.max_df_ratio * n_docs as f64)
    }
}

/// Ordered n-gram index with training-set document frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<usize>,
    n_docs: usize,
    n_range: (usize, usize),
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    terms: Vec<String>,
    doc_freq: Vec<usize>,
    n_docs: usize,
    n_range: (usize, usize),
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        Vocabulary::from_parts(r.terms, r.doc_freq, r.n_docs, r.n_range)
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            terms: v.terms,
            doc_freq: v.doc_freq,
            n_docs: v.n_docs,
            n_range: v.n_range,
        }
    }
}

impl Vocabulary {
    /// Builds a vocabulary from already-ordered terms and their frequencies.
    pub fn from_parts(
        terms: Vec<String>,
        doc_freq: Vec<usize>,
        n_docs: usize,
        n_range: (usize, usize),
    ) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary {
            terms,
            doc_freq,
            n_docs,
            n_range,
            index,
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

    pub fn doc_freqs(&self) -> &[usize] {
        &self.doc_freq
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn n_range(&self) -> (usize, usize) {
        self.n_range
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, i: usize) -> &str {
        &self.terms[i]
    }

    pub fn doc_freq(&self, term: &str) -> Option<usize> {
        self.index_of(term).map(|i| self.doc_freq[i])
    }

    /// Checks the structural invariants of a deserialized vocabulary.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::MalformedModel(m));
        if self.doc_freq.len() != self.terms.len() {
            return bad("doc_freq length differs from term count".into());
        }
        if self.index.len() != self.terms.len() {
            return bad("vocabulary terms are not unique".into());
        }
        if self.terms.windows(2).any(|w| w[0] >= w[1]) {
            return bad("vocabulary terms are not in lexicographic order".into());
        }
        let (lo, hi) = self.n_range;
        if lo == 0 || lo > hi {
            return bad(format!("invalid n-gram range {lo}..={hi}"));
        }
        for (t, &df) in self.terms.iter().zip(&self.doc_freq) {
            if df == 0 || df > self.n_docs {
                return bad(format!("term `{t}` has document frequency {df}"));
            }
        }
        Ok(())
    }
}

/// Fits the vocabulary on training documents only.
///
/// A term is kept iff `min_df <= df(t) <= floor(max_df_ratio * n_docs)`.
pub fn fit_vocabulary<S: AsRef<str>>(train_docs: &[S], config: &VocabConfig) -> Result<Vocabulary> {
    if train_docs.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if config.n_min == 0 || config.n_min > config.n_max {
        return Err(Error::InvalidNgramRange {
            min: config.n_min,
            max: config.n_max,
        });
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for doc in train_docs {
        let tokens = tokenize(doc.as_ref());
        let unique: BTreeSet<String> = extract_ngrams(&tokens, config.n_min, config.n_max)
            .into_iter()
            .collect();
        for g in unique {
            *df.entry(g).or_default() += 1;
        }
    }
    let n_docs = train_docs.len();
    let max_df = config.max_df(n_docs);
    let (terms, doc_freq): (Vec<_>, Vec<_>) = df
        .into_iter()
        .filter(|(_, d)| (config.min_df..=max_df).contains(d))
        .unzip();
    if terms.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    Ok(Vocabulary::from_parts(
        terms,
        doc_freq,
        n_docs,
        (config.n_min, config.n_max),
    ))
}

/// Index-sorted sparse vector holding only non-zero values.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
    dimension: usize,
}

impl SparseVector {
    pub fn empty(dimension: usize) -> Self {
        SparseVector {
            entries: Vec::new(),
            dimension,
        }
    }

    /// Builds a vector from `(index, value)` pairs, dropping zeros. Panics on
    /// an index out of range or a repeated index.
    pub fn from_pairs(dimension: usize, pairs: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut entries: Vec<(usize, f64)> = pairs.into_iter().filter(|(_, v)| *v != 0.0).collect();
        entries.sort_by_key(|(i, _)| *i);
        assert!(
            entries.windows(2).all(|w| w[0].0 != w[1].0),
            "repeated sparse index"
        );
        assert!(
            entries.iter().all(|(i, _)| *i < dimension),
            "sparse index out of range"
        );
        SparseVector { entries, dimension }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |(i, _)| *i)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v).sum()
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| dense[i] * v).sum()
    }
}

/// In-vocabulary n-gram counts (`f_{t,d}`).
pub fn count_vector(cleaned_text: &str, vocab: &Vocabulary) -> SparseVector {
    let (lo, hi) = vocab.n_range();
    let tokens = tokenize(cleaned_text);
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for g in extract_ngrams(&tokens, lo, hi) {
        if let Some(i) = vocab.index_of(&g) {
            *counts.entry(i).or_default() += 1.0;
        }
    }
    SparseVector {
        entries: counts.into_iter().collect(),
        dimension: vocab.len(),
    }
}

/// Divides every count by the vector's total.
pub fn term_frequency(counts: &SparseVector) -> SparseVector {
    let total = counts.sum();
    SparseVector {
        entries: counts
            .entries
            .iter()
            .map(|&(i, c)| (i, c / total))
            .collect(),
        dimension: counts.dimension,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IdfWeights {
    pub values: Vec<f64>,
}

impl IdfWeights {
    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn idf(n_docs: usize, doc_freq: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + doc_freq as f64)).ln() + 1.0
}

pub fn fit_idf(vocab: &Vocabulary) -> IdfWeights {
    IdfWeights {
        values: vocab
            .doc_freqs()
            .iter()
            .map(|&df| idf(vocab.n_docs(), df))
            .collect(),
    }
}

/// `tf(t, d) * idf(t)` for every in-vocabulary term of the document.
pub fn transform_tfidf(cleaned_text: &str, vocab: &Vocabulary, idf: &IdfWeights) -> SparseVector {
    let tf = term_frequency(&count_vector(cleaned_text, vocab));
    SparseVector {
        entries: tf
            .entries
            .into_iter()
            .map(|(i, v)| (i, v * idf.get(i)))
            .collect(),
        dimension: tf.dimension,
    }
}
