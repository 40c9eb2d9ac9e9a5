//! The versioned JSON model artifact and the text-to-prediction path built
//! on top of it.
//!
//! A model file carries everything needed to reproduce a prediction from raw
//! text: the cleaning rules (including the full stop-word list), the
//! vocabulary with its document frequencies, the idf vector, the weights and
//! the training configuration. Floats are written in shortest round-trip form,
//! so reading a file back yields bit-identical values.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::CleaningConfig;
use crate::error::{Error, Result};
use crate::explain::{explain_vector, global_ranking, DocumentExplanation, GlobalRanking};
use crate::features::{transform_tfidf, IdfWeights, SparseVector, VocabConfig, Vocabulary};
use crate::sgd::{predict, EvalMetrics, LinearModel, TrainConfig};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub train: EvalMetrics,
    pub val: EvalMetrics,
    pub test: EvalMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelArtifact {
    pub cleaning: CleaningConfig,
    pub vocab_config: VocabConfig,
    pub vocabulary: Vocabulary,
    pub idf: IdfWeights,
    pub model: LinearModel,
    pub metrics: Option<SplitMetrics>,
}

#[derive(Serialize, Deserialize)]
struct VocabularySection {
    min_df: usize,
    max_df_ratio: f64,
    n_range: (usize, usize),
    n_docs: usize,
    terms: Vec<String>,
    doc_freq: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct TrainingSection {
    epochs_run: usize,
    stopped_early: bool,
    best_epoch: usize,
    metrics: Option<SplitMetrics>,
}

#[derive(Serialize, Deserialize)]
struct ModelFileRepr {
    format_version: u32,
    cleaning: CleaningConfig,
    stop_words_hash: String,
    vocabulary: VocabularySection,
    idf: Vec<f64>,
    weights: Vec<f64>,
    intercept: f64,
    train_config: TrainConfig,
    training: TrainingSection,
}

impl ModelArtifact {
    pub fn to_json_bytes(&self) -> Result<Vec<u8>> {
        let v = &self.vocabulary;
        let repr = ModelFileRepr {
            format_version: FORMAT_VERSION,
            stop_words_hash: self.cleaning.stop_words_hash(),
            cleaning: self.cleaning.clone(),
            vocabulary: VocabularySection {
                min_df: self.vocab_config.min_df,
                max_df_ratio: self.vocab_config.max_df_ratio,
                n_range: v.n_range(),
                n_docs: v.n_docs(),
                terms: v.terms().to_vec(),
                doc_freq: v.doc_freqs().to_vec(),
            },
            idf: self.idf.values.clone(),
            weights: self.model.weights.clone(),
            intercept: self.model.intercept,
            train_config: self.model.config,
            training: TrainingSection {
                epochs_run: self.model.epochs_run,
                stopped_early: self.model.stopped_early,
                best_epoch: self.model.best_epoch,
                metrics: self.metrics.clone(),
            },
        };
        let mut bytes = serde_json::to_vec_pretty(&repr)?;
        bytes.push(b'\n');
        Ok(bytes)
    }

    pub fn from_json_bytes(bytes: &[u8]) -> Result<Self> {
        #[derive(Deserialize)]
        struct VersionProbe {
            format_version: u32,
        }
        let probe: VersionProbe = serde_json::from_slice(bytes)?;
        if probe.format_version != FORMAT_VERSION {
            return Err(Error::UnsupportedFormat(probe.format_version));
        }
        let repr: ModelFileRepr = serde_json::from_slice(bytes)?;
        if repr.stop_words_hash != repr.cleaning.stop_words_hash() {
            return Err(Error::MalformedModel(
                "stop-word hash does not match the stored list".into(),
            ));
        }
        let vs = repr.vocabulary;
        let vocabulary = Vocabulary::from_parts(vs.terms, vs.doc_freq, vs.n_docs, vs.n_range);
        let artifact = ModelArtifact {
            cleaning: repr.cleaning,
            vocab_config: VocabConfig {
                min_df: vs.min_df,
                max_df_ratio: vs.max_df_ratio,
                n_min: vs.n_range.0,
                n_max: vs.n_range.1,
            },
            vocabulary,
            idf: IdfWeights { values: repr.idf },
            model: LinearModel {
                weights: repr.weights,
                intercept: repr.intercept,
                config: repr.train_config,
                epochs_run: repr.training.epochs_run,
                stopped_early: repr.training.stopped_early,
                best_epoch: repr.training.best_epoch,
            },
            metrics: repr.training.metrics,
        };
        artifact.validate()?;
        Ok(artifact)
    }

    pub fn validate(&self) -> Result<()> {
        self.vocabulary.validate()?;
        let n = self.vocabulary.len();
        let bad = |m: String| Err(Error::MalformedModel(m));
        if self.idf.len() != n {
            return bad(format!("{} idf values for {n} terms", self.idf.len()));
        }
        if self.model.weights.len() != n {
            return bad(format!(
                "{} weights for {n} terms",
                self.model.weights.len()
            ));
        }
        if self.idf.values.iter().any(|v| !v.is_finite() || *v < 1.0) {
            return bad("idf values must be finite and >= 1".into());
        }
        if !self.model.intercept.is_finite() || self.model.weights.iter().any(|w| !w.is_finite()) {
            return bad("weights must be finite".into());
        }
        Ok(())
    }

    /// Writes through a temporary file and renames, so a failed write never
    /// leaves a partial model behind.
    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_json_bytes()?)
    }

    pub fn load(path: &Path) -> Result<LoadedModel> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        LoadedModel::from_bytes(&bytes).map_err(|e| match e {
            Error::Json(j) => Error::parse(path, j.to_string()),
            other => other,
        })
    }

    pub fn featurize(&self, raw_text: &str) -> (String, SparseVector) {
        let cleaned = self.cleaning.clean(raw_text);
        let x = transform_tfidf(&cleaned, &self.vocabulary, &self.idf);
        (cleaned, x)
    }

    /// Cleans, featurizes and predicts raw decision text.
    pub fn predict_text(&self, raw_text: &str) -> Result<f64> {
        predict(&self.model, &self.featurize(raw_text).1)
    }

    pub fn explain_text(&self, raw_text: &str, k: usize) -> Result<DocumentExplanation> {
        explain_vector(
            &self.model,
            &self.featurize(raw_text).1,
            &self.vocabulary,
            k,
        )
    }

    pub fn global_ranking(&self, k: usize) -> GlobalRanking {
        global_ranking(&self.model, &self.vocabulary, &self.idf, k)
    }
}

/// A model together with the SHA-256 of the bytes it was read from.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub artifact: ModelArtifact,
    pub content_hash: String,
}

impl LoadedModel {
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Ok(LoadedModel {
            artifact: ModelArtifact::from_json_bytes(bytes)?,
            content_hash: sha256_hex(bytes),
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::parse(path, "not a file path"))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{file_name}.tmp{}", std::process::id()));
    let result = fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(bytes)?;
            f.sync_all()
        })
        .and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}
