//! Synthetic decision corpora generated from a planted sparse linear model.
//!
//! Each document mixes a few *signal* words (drawn from a fixed pool of
//! `vocab_size` pseudo-words) with *filler* words that are unique across the
//! whole corpus, plus boilerplate that appears in every document and
//! label-leaking tokens the cleaner must strip. Fillers separate consecutive
//! signal words, so no signal bigram ever forms; fillers themselves have
//! document frequency 1 and boilerplate has frequency 1.0, so after pruning
//! the fitted vocabulary is exactly the signal pool.
//!
//! Targets are `intercept + sum_j w_j * tf_j * idf_j + noise`, with tf and
//! idf computed over the signal words of the full corpus.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::RngCore;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::{parse_stop_words, write_labels, RawDocument, DEFAULT_STOP_WORDS};
use crate::error::{Error, Result};
use crate::features::idf;
use crate::model_file::write_atomic;
use crate::rng;

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

/// Per-document inclusion probability of each signal word.
const SIGNAL_RATE: f64 = 0.1;
/// Probability that an included signal word appears twice.
const REPEAT_RATE: f64 = 0.2;
/// Share of documents drawn with no signal words at all. These anchor the
/// intercept: tf-normalized features of any other document sum to a fixed
/// value, so without them intercept and weights trade off freely.
const NO_SIGNAL_RATE: f64 = 0.25;

pub const PLANTED_MODEL_FILE: &str = "planted_model.json";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_docs: usize,
    pub vocab_size: usize,
    /// Fraction of the signal pool carrying a non-zero planted weight.
    pub sparsity: f64,
    pub noise_sigma: f64,
    pub intercept: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_docs: 300,
            vocab_size: 30,
            sparsity: 0.3,
            noise_sigma: 1.0,
            intercept: 60.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTerm {
    pub phrase: String,
    pub weight: f64,
    /// idf over the full generated corpus.
    pub idf: f64,
    pub doc_freq: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedModel {
    pub config: SynthConfig,
    pub intercept: f64,
    pub n_docs: usize,
    pub terms: Vec<PlantedTerm>,
}

impl PlantedModel {
    pub fn term(&self, phrase: &str) -> Option<&PlantedTerm> {
        self.terms.iter().find(|t| t.phrase == phrase)
    }

    pub fn active(&self) -> impl Iterator<Item = &PlantedTerm> {
        self.terms.iter().filter(|t| t.weight != 0.0)
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub documents: Vec<RawDocument>,
    pub labels: Vec<(String, f64)>,
    /// Noise-free targets, aligned with `labels`.
    pub clean_targets: Vec<f64>,
    pub planted: PlantedModel,
}

fn syllable<R: RngCore>(rng: &mut R) -> String {
    let c = CONSONANTS[rng::below(rng, CONSONANTS.len() as u64) as usize] as char;
    let v = VOWELS[rng::below(rng, VOWELS.len() as u64) as usize] as char;
    format!("{c}{v}")
}

/// Filler words start with `q`, which never occurs in a signal word.
fn filler_word(mut n: usize) -> String {
    let mut w = String::from("q");
    loop {
        let s = n % (CONSONANTS.len() * VOWELS.len());
        w.push(CONSONANTS[s / VOWELS.len()] as char);
        w.push(VOWELS[s % VOWELS.len()] as char);
        n /= CONSONANTS.len() * VOWELS.len();
        if n == 0 {
            return w;
        }
    }
}

fn validate(config: &SynthConfig) -> Result<()> {
    let fail = |m: &str| Err(Error::InvalidConfig(m.to_string()));
    if config.n_docs < 1 {
        return fail("n_docs must be >= 1");
    }
    if config.vocab_size < 1 || config.vocab_size > 2000 {
        return fail("vocab_size must be in 1..=2000");
    }
    if !(0.0..=1.0).contains(&config.sparsity) {
        return fail("sparsity must be in [0, 1]");
    }
    if !(config.noise_sigma >= 0.0 && config.noise_sigma.is_finite()) {
        return fail("noise_sigma must be finite and >= 0");
    }
    if !(config.intercept >= 0.0 && config.intercept.is_finite()) {
        return fail("intercept must be finite and >= 0");
    }
    Ok(())
}

pub fn generate(config: &SynthConfig) -> Result<SynthCorpus> {
    validate(config)?;
    let mut rng = rng::seeded(config.seed);
    let stop_words = parse_stop_words(DEFAULT_STOP_WORDS);

    let mut pool: Vec<String> = Vec::with_capacity(config.vocab_size);
    while pool.len() < config.vocab_size {
        let w: String = (0..3).map(|_| syllable(&mut rng)).collect();
        if !stop_words.contains(&w) && !pool.contains(&w) {
            pool.push(w);
        }
    }
    pool.sort();

    let n_active = (config.sparsity * config.vocab_size as f64).round() as usize;
    let mut order: Vec<usize> = (0..pool.len()).collect();
    rng::shuffle(&mut rng, &mut order);
    let mut weights = vec![0.0; pool.len()];
    for &j in &order[..n_active] {
        // Negative weights stay small enough that targets remain >= 0.
        weights[j] = if rng::unit(&mut rng) < 0.5 {
            10.0 + 20.0 * rng::unit(&mut rng)
        } else {
            -(5.0 + 10.0 * rng::unit(&mut rng))
        };
    }

    // Signal counts per document.
    let mut counts: Vec<BTreeMap<usize, usize>> = Vec::with_capacity(config.n_docs);
    for _ in 0..config.n_docs {
        let mut doc = BTreeMap::new();
        if rng::unit(&mut rng) < NO_SIGNAL_RATE {
            counts.push(doc);
            continue;
        }
        for j in 0..pool.len() {
            if rng::unit(&mut rng) < SIGNAL_RATE {
                let c = if rng::unit(&mut rng) < REPEAT_RATE {
                    2
                } else {
                    1
                };
                doc.insert(j, c);
            }
        }
        counts.push(doc);
    }
    let mut doc_freq = vec![0usize; pool.len()];
    for doc in &counts {
        for &j in doc.keys() {
            doc_freq[j] += 1;
        }
    }
    let idf_values: Vec<f64> = doc_freq.iter().map(|&df| idf(config.n_docs, df)).collect();

    let noise =
        Normal::new(0.0, config.noise_sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut next_filler = 0usize;
    let mut filler = || {
        next_filler += 1;
        filler_word(next_filler)
    };
    let leaks = [
        "home detention",
        "the",
        "14 months",
        "Community Detention",
        "2",
        "years",
    ];

    let mut documents = Vec::with_capacity(config.n_docs);
    let mut labels = Vec::with_capacity(config.n_docs);
    let mut clean_targets = Vec::with_capacity(config.n_docs);
    for (d, doc) in counts.iter().enumerate() {
        let total: usize = doc.values().sum();
        let signal: f64 = doc
            .iter()
            .map(|(&j, &c)| weights[j] * (c as f64 / total as f64) * idf_values[j])
            .sum();
        let target = config.intercept + signal;
        let y = (target + noise.sample(&mut rng)).max(0.0);

        let mut tokens: Vec<&str> = doc
            .iter()
            .flat_map(|(&j, &c)| std::iter::repeat_n(pool[j].as_str(), c))
            .collect();
        rng::shuffle(&mut rng, &mut tokens);
        let mut body = vec![filler()];
        for t in tokens {
            body.push(t.to_string());
            body.push(filler());
            if rng::unit(&mut rng) < 0.3 {
                let leak = leaks[rng::below(&mut rng, leaks.len() as u64) as usize];
                body.push(leak.to_string());
                body.push(filler());
            }
        }
        let text = format!(
            "The offender appeared for sentencing.\n{}.\nSentence imposed: {} months imprisonment.\n",
            body.join(" "),
            y.round()
        );
        let id = format!("case_{:04}", d + 1);
        documents.push(RawDocument {
            id: id.clone(),
            text,
        });
        labels.push((id, y));
        clean_targets.push(target);
    }

    let terms = pool
        .into_iter()
        .enumerate()
        .map(|(j, phrase)| PlantedTerm {
            phrase,
            weight: weights[j],
            idf: idf_values[j],
            doc_freq: doc_freq[j],
        })
        .collect();
    Ok(SynthCorpus {
        documents,
        labels,
        clean_targets,
        planted: PlantedModel {
            config: *config,
            intercept: config.intercept,
            n_docs: config.n_docs,
            terms,
        },
    })
}

impl SynthCorpus {
    /// Writes `<id>.txt` files, `labels.csv` and the planted-model sidecar.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for doc in &self.documents {
            let path = dir.join(format!("{}.txt", doc.id));
            fs::write(&path, &doc.text).map_err(|e| Error::io(&path, e))?;
        }
        write_labels(&dir.join("labels.csv"), &self.labels)?;
        let mut sidecar = serde_json::to_vec_pretty(&self.planted)?;
        sidecar.push(b'\n');
        write_atomic(&dir.join(PLANTED_MODEL_FILE), &sidecar)
    }
}

pub fn read_planted(path: &Path) -> Result<PlantedModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::parse(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CleaningConfig;
    use crate::features::{fit_vocabulary, VocabConfig};

    #[test]
    fn filler_words_are_unique() {
        let words: std::collections::HashSet<_> = (0..10_000).map(filler_word).collect();
        assert_eq!(words.len(), 10_000);
        assert!(words.iter().all(|w| w.starts_with('q')));
    }

    #[test]
    fn deterministic() {
        let a = generate(&SynthConfig::default()).unwrap();
        let b = generate(&SynthConfig::default()).unwrap();
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.documents, b.documents);
        let c = generate(&SynthConfig {
            seed: 1,
            ..SynthConfig::default()
        })
        .unwrap();
        assert_ne!(a.labels, c.labels);
    }

    #[test]
    fn planted_shape() {
        let s = generate(&SynthConfig::default()).unwrap();
        assert_eq!(s.documents.len(), 300);
        assert_eq!(s.planted.terms.len(), 30);
        assert_eq!(s.planted.active().count(), 9);
        assert!(s.labels.iter().all(|(_, y)| *y >= 0.0));
    }

    #[test]
    fn cleaned_vocabulary_is_the_signal_pool() {
        let s = generate(&SynthConfig::default()).unwrap();
        let cfg = CleaningConfig::default();
        let cleaned: Vec<String> = s.documents.iter().map(|d| cfg.clean(&d.text)).collect();
        for c in &cleaned {
            assert!(!c.contains("detention"));
            assert!(!c
                .split(' ')
                .any(|t| t == "months" || t.chars().all(char::is_numeric)));
        }
        let vocab = fit_vocabulary(&cleaned, &VocabConfig::default()).unwrap();
        let pool: Vec<&str> = s.planted.terms.iter().map(|t| t.phrase.as_str()).collect();
        assert_eq!(vocab.terms(), pool.as_slice());
        for t in &s.planted.terms {
            assert_eq!(vocab.doc_freq(&t.phrase), Some(t.doc_freq));
        }
    }

    #[test]
    fn rejects_bad_config() {
        let bad = SynthConfig {
            sparsity: 1.5,
            ..SynthConfig::default()
        };
        assert!(matches!(generate(&bad), Err(Error::InvalidConfig(_))));
    }
}
