//! End-to-end training: clean, split, fit features on the training split,
//! train, and evaluate on all three splits.

use std::collections::BTreeMap;

use crate::config::RunConfig;
use crate::corpus::{load_corpus, split_corpus, CorpusSplit, LabeledDocument, RawDocument};
use crate::error::Result;
use crate::explain::{scatter_data, ScatterData};
use crate::features::{fit_idf, fit_vocabulary, transform_tfidf, IdfWeights, Vocabulary};
use crate::model_file::{ModelArtifact, SplitMetrics};
use crate::sgd::{evaluate, train, Example};

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub artifact: ModelArtifact,
    pub split: CorpusSplit,
    pub metrics: SplitMetrics,
    /// Test-split predictions against truth.
    pub scatter: ScatterData,
}

pub fn featurize(docs: &[LabeledDocument], vocab: &Vocabulary, idf: &IdfWeights) -> Vec<Example> {
    docs.iter()
        .map(|d| {
            (
                transform_tfidf(&d.cleaned_text, vocab, idf),
                d.sentence_months,
            )
        })
        .collect()
}

/// Runs the full training pipeline. The test split is only touched after
/// the model is fixed.
pub fn train_pipeline(
    documents: &[RawDocument],
    labels: &BTreeMap<String, f64>,
    config: &RunConfig,
) -> Result<TrainOutcome> {
    let corpus = load_corpus(documents, labels, &config.cleaning)?;
    let split = split_corpus(&corpus, &config.split)?;
    let train_texts: Vec<&str> = split
        .train
        .iter()
        .map(|d| d.cleaned_text.as_str())
        .collect();
    let vocabulary = fit_vocabulary(&train_texts, &config.vocab)?;
    let idf = fit_idf(&vocabulary);

    let train_set = featurize(&split.train, &vocabulary, &idf);
    let val_set = featurize(&split.val, &vocabulary, &idf);
    let model = train(&train_set, &val_set, vocabulary.len(), &config.train)?;

    let test_set = featurize(&split.test, &vocabulary, &idf);
    let metrics = SplitMetrics {
        train: evaluate(&model, &train_set)?,
        val: evaluate(&model, &val_set)?,
        test: evaluate(&model, &test_set)?,
    };
    let scatter = scatter_data(
        &model,
        split
            .test
            .iter()
            .zip(&test_set)
            .map(|(d, (x, y))| (d.id.as_str(), x, *y)),
    )?;
    let artifact = ModelArtifact {
        cleaning: config.cleaning.clone(),
        vocab_config: config.vocab,
        vocabulary,
        idf,
        model,
        metrics: Some(metrics.clone()),
    };
    Ok(TrainOutcome {
        artifact,
        split,
        metrics,
        scatter,
    })
}
