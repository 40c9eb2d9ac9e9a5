//! Global phrase rankings, per-document contribution breakdowns and
//! prediction-vs-truth scatter data.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{transform_tfidf, IdfWeights, SparseVector, Vocabulary};
use crate::sgd::{predict, LinearModel};

/// Default number of phrases per ranking list.
pub const DEFAULT_TOP_K: usize = 25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhraseInfluence {
    pub phrase: String,
    pub adjusted_weight: f64,
    pub raw_weight: f64,
    pub doc_freq_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalRanking {
    pub top_positive: Vec<PhraseInfluence>,
    pub top_negative: Vec<PhraseInfluence>,
}

/// Ranks phrases by `weight * idf`. Zero weights never appear and ties are
/// broken by phrase.
pub fn global_ranking(
    model: &LinearModel,
    vocab: &Vocabulary,
    idf: &IdfWeights,
    k: usize,
) -> GlobalRanking {
    let n_docs = vocab.n_docs() as f64;
    let influences: Vec<PhraseInfluence> = model
        .weights
        .iter()
        .enumerate()
        .filter(|(_, w)| **w != 0.0)
        .map(|(i, &w)| PhraseInfluence {
            phrase: vocab.term(i).to_string(),
            adjusted_weight: w * idf.get(i),
            raw_weight: w,
            doc_freq_ratio: vocab.doc_freqs()[i] as f64 / n_docs,
        })
        .collect();
    let mut positive: Vec<_> = influences
        .iter()
        .filter(|p| p.adjusted_weight > 0.0)
        .cloned()
        .collect();
    positive.sort_by(|a, b| {
        b.adjusted_weight
            .total_cmp(&a.adjusted_weight)
            .then_with(|| a.phrase.cmp(&b.phrase))
    });
    positive.truncate(k);

    let mut negative: Vec<_> = influences
        .into_iter()
        .filter(|p| p.adjusted_weight < 0.0)
        .collect();
    negative.sort_by(|a, b| {
        a.adjusted_weight
            .total_cmp(&b.adjusted_weight)
            .then_with(|| a.phrase.cmp(&b.phrase))
    });
    negative.truncate(k);

    GlobalRanking {
        top_positive: positive,
        top_negative: negative,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub phrase: String,
    pub tfidf: f64,
    pub weight: f64,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentExplanation {
    pub prediction: f64,
    pub intercept: f64,
    /// Top contributions by magnitude, truncated for display.
    pub contributions: Vec<Contribution>,
    /// Sum over every non-zero feature, before truncation.
    pub contribution_total: f64,
    /// Number of contributing features before truncation.
    pub n_features: usize,
}

/// Breaks the prediction for an already featurized document into
/// `weight * tfidf` terms.
pub fn explain_vector(
    model: &LinearModel,
    x: &SparseVector,
    vocab: &Vocabulary,
    k: usize,
) -> Result<DocumentExplanation> {
    let prediction = predict(model, x)?;
    let mut contributions: Vec<Contribution> = x
        .entries()
        .iter()
        .map(|&(i, v)| Contribution {
            phrase: vocab.term(i).to_string(),
            tfidf: v,
            weight: model.weights[i],
            contribution: model.weights[i] * v,
        })
        .collect();
    // Same summation order as `SparseVector::dot`.
    let contribution_total: f64 = contributions.iter().map(|c| c.contribution).sum();
    let n_features = contributions.len();
    contributions.sort_by(|a, b| {
        b.contribution
            .abs()
            .total_cmp(&a.contribution.abs())
            .then_with(|| a.phrase.cmp(&b.phrase))
    });
    contributions.truncate(k);
    Ok(DocumentExplanation {
        prediction,
        intercept: model.intercept,
        contributions,
        contribution_total,
        n_features,
    })
}

pub fn explain_document(
    model: &LinearModel,
    cleaned_text: &str,
    vocab: &Vocabulary,
    idf: &IdfWeights,
    k: usize,
) -> Result<DocumentExplanation> {
    explain_vector(model, &transform_tfidf(cleaned_text, vocab, idf), vocab, k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub id: String,
    pub truth_months: f64,
    pub predicted_months: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScatterData {
    pub points: Vec<ScatterPoint>,
}

/// One point per document of `(id, x, y)` triples, in dataset order.
pub fn scatter_data<'a, I>(model: &LinearModel, dataset: I) -> Result<ScatterData>
where
    I: IntoIterator<Item = (&'a str, &'a SparseVector, f64)>,
{
    let points = dataset
        .into_iter()
        .map(|(id, x, y)| {
            Ok(ScatterPoint {
                id: id.to_string(),
                truth_months: y,
                predicted_months: predict(model, x)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if points.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(ScatterData { points })
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::parse("<csv output>", e.to_string())
}

/// `phrase,adjusted_weight,raw_weight,doc_freq_ratio`
pub fn write_ranking_csv<W: Write>(out: W, rows: &[PhraseInfluence]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["phrase", "adjusted_weight", "raw_weight", "doc_freq_ratio"])
        .map_err(csv_err)?;
    for r in rows {
        w.serialize((&r.phrase, r.adjusted_weight, r.raw_weight, r.doc_freq_ratio))
            .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

/// `id,truth_months,predicted_months`
pub fn write_scatter_csv<W: Write>(out: W, data: &ScatterData) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "truth_months", "predicted_months"])
        .map_err(csv_err)?;
    for p in &data.points {
        w.serialize((&p.id, p.truth_months, p.predicted_months))
            .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

/// `phrase,tfidf,weight,contribution`
pub fn write_contributions_csv<W: Write>(out: W, rows: &[Contribution]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["phrase", "tfidf", "weight", "contribution"])
        .map_err(csv_err)?;
    for c in rows {
        w.serialize((&c.phrase, c.tfidf, c.weight, c.contribution))
            .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}
