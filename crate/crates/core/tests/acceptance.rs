//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tower::ServiceExt;

use common::{cli, s, synth_corpus, train};
use sentencelens::corpus::{split_corpus, LabeledDocument, SplitSpec};
use sentencelens::explain::global_ranking;
use sentencelens::features::{
    fit_idf, fit_vocabulary, idf, transform_tfidf, IdfWeights, VocabConfig, Vocabulary,
};
use sentencelens::model_file::ModelArtifact;
use sentencelens::service::router;
use sentencelens::sgd::{loss, loss_gradient, predict, LinearModel, TrainConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---- tf-idf ----

/// Dictionary tf-idf written from the formulas alone: n-grams of orders 1-3,
/// `min_df <= df <= floor(0.9 n)`, tf over in-vocabulary counts,
/// `idf = ln((1+n)/(1+df)) + 1`.
fn oracle_tfidf(docs: &[String]) -> (Vec<String>, Vec<HashMap<String, f64>>) {
    let grams = |d: &str| -> Vec<String> {
        let toks: Vec<&str> = d.split_whitespace().collect();
        let mut out = Vec::new();
        for n in 1..=3 {
            for w in toks.windows(n) {
                out.push(w.join(" "));
            }
        }
        out
    };
    let n = docs.len();
    let mut df: HashMap<String, usize> = HashMap::new();
    for d in docs {
        let uniq: BTreeSet<String> = grams(d).into_iter().collect();
        for g in uniq {
            *df.entry(g).or_default() += 1;
        }
    }
    // df <= floor(0.9 n)  <=>  10 df <= 9 n
    let mut vocab: Vec<String> = df
        .iter()
        .filter(|(_, &c)| c >= 3 && 10 * c <= 9 * n)
        .map(|(g, _)| g.clone())
        .collect();
    vocab.sort();
    let vset: BTreeSet<&String> = vocab.iter().collect();
    let rows = docs
        .iter()
        .map(|d| {
            let mut counts: HashMap<String, f64> = HashMap::new();
            for g in grams(d) {
                if vset.contains(&g) {
                    *counts.entry(g).or_default() += 1.0;
                }
            }
            let total: f64 = counts.values().sum();
            counts
                .into_iter()
                .map(|(g, c)| {
                    let w = (c / total) * (((1 + n) as f64 / (1 + df[&g]) as f64).ln() + 1.0);
                    (g, w)
                })
                .collect()
        })
        .collect();
    (vocab, rows)
}

fn tfidf_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let words = ["a1", "b2", "c3", "d4", "e5", "f6"];
    let mut compared = 0usize;
    for corpus_no in 0..50 {
        let n_docs = rng.random_range(5..=20);
        let docs: Vec<String> = (0..n_docs)
            .map(|_| {
                let len = rng.random_range(1..=50);
                (0..len)
                    .map(|_| words[rng.random_range(0..words.len())])
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        let (oracle_vocab, oracle_rows) = oracle_tfidf(&docs);
        let vocab = match fit_vocabulary(&docs, &VocabConfig::default()) {
            Ok(v) => v,
            Err(e) => {
                ensure(oracle_vocab.is_empty(), || {
                    format!(
                        "corpus {corpus_no}: module rejected ({e}) but oracle kept {} terms",
                        oracle_vocab.len()
                    )
                })?;
                continue;
            }
        };
        ensure(vocab.terms() == oracle_vocab.as_slice(), || {
            format!("corpus {corpus_no}: vocabulary differs")
        })?;
        let idf_w = fit_idf(&vocab);
        for (d, doc) in docs.iter().enumerate() {
            let x = transform_tfidf(doc, &vocab, &idf_w);
            for (j, term) in vocab.terms().iter().enumerate() {
                let want = oracle_rows[d].get(term).copied().unwrap_or(0.0);
                let got = x.get(j);
                ensure((want - got).abs() <= 1e-9, || {
                    format!("corpus {corpus_no} doc {d} `{term}`: {got} vs oracle {want}")
                })?;
                compared += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 5.0, || format!("took {secs:.2} s"))?;
    Ok(format!("{compared} entries within 1e-9, {secs:.3} s"))
}

fn idf_spot_values() -> Outcome {
    let a = idf(3, 3);
    let b = idf(3, 1);
    ensure(a == 1.0, || format!("idf(3,3) = {a}"))?;
    ensure((b - 1.693147).abs() <= 1e-6, || format!("idf(3,1) = {b}"))?;
    Ok(format!("idf(3,3) = {a}, idf(3,1) = {b:.6}"))
}

// ---- loss ----

fn loss_and_gradient() -> Outcome {
    let start = Instant::now();
    let l = loss(5.0, 6.0, 0.1).map_err(|e| e.to_string())?;
    ensure(l == 0.81, || format!("loss(5, 6, 0.1) = {l}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = 1e-6;
    let mut checked = 0;
    while checked < 1000 {
        let y: f64 = rng.random_range(-100.0..100.0);
        let p: f64 = rng.random_range(-100.0..100.0);
        let eps: f64 = rng.random_range(0.0..2.0);
        let r = (p - y).abs();
        if (r - eps).abs() < 1e-3 || r < 1e-3 {
            continue;
        }
        let g = loss_gradient(y, p, eps).map_err(|e| e.to_string())?;
        let fd = (loss(y, p + h, eps).unwrap() - loss(y, p - h, eps).unwrap()) / (2.0 * h);
        ensure((g - fd).abs() <= 1e-5 * g.abs().max(1.0), || {
            format!("y={y} p={p} eps={eps}: analytic {g}, numeric {fd}")
        })?;
        checked += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 1.0, || format!("took {secs:.2} s"))?;
    Ok(format!(
        "loss = 0.81, {checked} gradient points, {secs:.3} s"
    ))
}

// ---- planted corpus ----

fn metrics_of(root: &Path) -> serde_json::Value {
    let bytes = std::fs::read(root.join("model.metrics.json")).unwrap();
    serde_json::from_slice(&bytes).unwrap()
}

fn planted_recovery() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(tmp.path());
    let start = Instant::now();
    let o = train(&corpus, &tmp.path().join("model.json"), &[]);
    let secs = start.elapsed().as_secs_f64();
    ensure(o.code == 0, || o.stderr.clone())?;
    let m = metrics_of(tmp.path());
    let r2 = m["test"]["r_squared"].as_f64().unwrap();
    let mae = m["test"]["mae"].as_f64().unwrap();
    ensure(r2 >= 0.9, || format!("test R2 {r2}"))?;
    ensure(mae <= 2.0, || format!("test MAE {mae}"))?;
    ensure(secs < 60.0, || format!("training took {secs:.1} s"))?;
    Ok(format!(
        "test R2 = {r2:.4}, test MAE = {mae:.3} months, {secs:.2} s"
    ))
}

fn l1_sparsity() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(tmp.path());
    let mut counts = Vec::new();
    for alpha in ["0", "0.001", "0.01", "0.1", "10"] {
        let out = tmp.path().join(format!("m{alpha}.json"));
        let o = train(&corpus, &out, &["--alpha", alpha, "--seed", "3"]);
        ensure(o.code == 0, || o.stderr.clone())?;
        let model = ModelArtifact::load(&out).map_err(|e| e.to_string())?;
        counts.push((alpha, model.artifact.model.nonzero_weights()));
    }
    let ladder: Vec<usize> = counts[..4].iter().map(|c| c.1).collect();
    ensure(ladder.windows(2).all(|w| w[1] <= w[0]), || {
        format!("non-zero counts not monotone: {counts:?}")
    })?;
    ensure(counts[4].1 == 0, || {
        format!("alpha=10 left {} weights", counts[4].1)
    })?;
    Ok(format!("non-zero weights {counts:?}"))
}

// ---- split ----

fn docs(n: usize) -> Vec<LabeledDocument> {
    (0..n)
        .map(|i| LabeledDocument {
            id: format!("d{i:05}"),
            cleaned_text: "x".into(),
            sentence_months: i as f64,
        })
        .collect()
}

fn split_exactness() -> Outcome {
    let spec = SplitSpec::default();
    let s302 = split_corpus(&docs(302), &spec).map_err(|e| e.to_string())?;
    let sizes = (s302.train.len(), s302.val.len(), s302.test.len());
    ensure(sizes == (197, 30, 75), || format!("N=302 gave {sizes:?}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(302);
    for _ in 0..100 {
        let n = rng.random_range(10..=3000);
        let spec = SplitSpec {
            seed: rng.random(),
            ..SplitSpec::default()
        };
        let all = docs(n);
        let sp = split_corpus(&all, &spec).map_err(|e| e.to_string())?;
        // floor(0.25 n) and floor(0.10 n) in integer arithmetic
        let (want_test, want_val) = (n / 4, n / 10);
        ensure(
            sp.test.len() == want_test && sp.val.len() == want_val,
            || format!("N={n}: val {} test {}", sp.val.len(), sp.test.len()),
        )?;
        let mut seen = BTreeSet::new();
        for d in sp.train.iter().chain(&sp.val).chain(&sp.test) {
            ensure(seen.insert(d.id.clone()), || {
                format!("N={n}: {} dealt twice", d.id)
            })?;
        }
        ensure(seen.len() == n, || {
            format!("N={n}: union has {} ids", seen.len())
        })?;
    }
    Ok("N=302 -> (197, 30, 75); 100 random sizes partition exactly".into())
}

// ---- determinism ----

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(tmp.path());
    let mut runs = Vec::new();
    for name in ["a", "b"] {
        let dir = tmp.path().join(name);
        std::fs::create_dir(&dir).unwrap();
        let o = train(&corpus, &dir.join("model.json"), &["--seed", "42"]);
        ensure(o.code == 0, || o.stderr.clone())?;
        runs.push((
            std::fs::read(dir.join("model.json")).unwrap(),
            std::fs::read(dir.join("model.metrics.json")).unwrap(),
        ));
    }
    ensure(runs[0].0 == runs[1].0, || "model files differ".into())?;
    ensure(runs[0].1 == runs[1].1, || "metrics files differ".into())?;
    Ok(format!(
        "model ({} bytes) and metrics byte-identical",
        runs[0].0.len()
    ))
}

// ---- explanations ----

fn explanation_consistency() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(tmp.path());
    let out = tmp.path().join("model.json");
    let o = train(&corpus, &out, &[]);
    ensure(o.code == 0, || o.stderr.clone())?;
    let loaded = ModelArtifact::load(&out).map_err(|e| e.to_string())?;
    let a = &loaded.artifact;
    let terms = a.vocabulary.terms().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let len = rng.random_range(0..40);
        let text: Vec<String> = (0..len)
            .map(|_| {
                if rng.random_bool(0.6) {
                    terms[rng.random_range(0..terms.len())].clone()
                } else {
                    format!("junk{}", rng.random_range(0..50))
                }
            })
            .collect();
        let text = format!("Decision {i}. {}", text.join(" "));
        let e = a.explain_text(&text, 5).map_err(|e| e.to_string())?;
        let (_, x) = a.featurize(&text);
        let direct = predict(&a.model, &x).map_err(|e| e.to_string())?;
        ensure(e.prediction == direct, || {
            format!("doc {i}: prediction differs from predict()")
        })?;
        let gap = (e.intercept + e.contribution_total - e.prediction).abs();
        worst = worst.max(gap);
        ensure(gap <= 1e-9, || format!("doc {i}: sum off by {gap}"))?;
    }

    // Ranking against a full sort on 200 random terms, with zeros and ties.
    let n = 200;
    let terms: Vec<String> = (0..n).map(|i| format!("t{i:03}")).collect();
    let df: Vec<usize> = (0..n).map(|_| rng.random_range(1..50)).collect();
    let vocab = Vocabulary::from_parts(terms.clone(), df, 60, (1, 3));
    let idf_w = IdfWeights {
        values: (0..n)
            .map(|_| [1.0, 1.5, 2.0][rng.random_range(0..3)])
            .collect(),
    };
    let weights: Vec<f64> = (0..n)
        .map(|_| match rng.random_range(0..4) {
            0 => 0.0,
            1 => [-1.0, 1.0][rng.random_range(0..2)],
            _ => rng.random_range(-5.0..5.0),
        })
        .collect();
    let model = LinearModel {
        weights: weights.clone(),
        intercept: 0.0,
        config: TrainConfig::default(),
        epochs_run: 1,
        stopped_early: false,
        best_epoch: 1,
    };
    let mut all: Vec<(f64, String)> = (0..n)
        .filter(|&i| weights[i] != 0.0)
        .map(|i| (weights[i] * idf_w.values[i], terms[i].clone()))
        .collect();
    all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let want_pos: Vec<_> = all.iter().filter(|p| p.0 > 0.0).cloned().collect();
    let mut want_neg: Vec<_> = all.iter().filter(|p| p.0 < 0.0).cloned().collect();
    want_neg.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let got = global_ranking(&model, &vocab, &idf_w, n);
    let got_pos: Vec<_> = got
        .top_positive
        .iter()
        .map(|p| (p.adjusted_weight, p.phrase.clone()))
        .collect();
    let got_neg: Vec<_> = got
        .top_negative
        .iter()
        .map(|p| (p.adjusted_weight, p.phrase.clone()))
        .collect();
    ensure(got_pos == want_pos, || {
        "positive ranking differs from full sort".into()
    })?;
    ensure(got_neg == want_neg, || {
        "negative ranking differs from full sort".into()
    })?;
    let top10 = global_ranking(&model, &vocab, &idf_w, 10);
    ensure(
        top10.top_positive.len() == 10
            && top10
                .top_positive
                .iter()
                .zip(&want_pos)
                .all(|(g, w)| g.phrase == w.1),
        || "top-10 is not a prefix of the full sort".into(),
    )?;
    Ok(format!(
        "100 documents, worst gap {worst:.1e}; ranking of {} weighted terms matches full sort",
        all.len()
    ))
}

// ---- service ----

fn service_round_trip() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(tmp.path());
    let out = tmp.path().join("model.json");
    let o = train(&corpus, &out, &[]);
    ensure(o.code == 0, || o.stderr.clone())?;
    let model = ModelArtifact::load(&out).map_err(|e| e.to_string())?;
    // First decision with at least one known phrase.
    let text = (1..=300)
        .map(|i| std::fs::read_to_string(corpus.join(format!("case_{i:04}.txt"))).unwrap())
        .find(|t| model.artifact.featurize(t).1.nnz() > 0)
        .ok_or("no document with known phrases")?;
    let text_path = tmp.path().join("input.txt");
    std::fs::write(&text_path, &text).unwrap();

    let p = cli(&["predict", "--model", s(&out), s(&text_path)], "");
    ensure(p.code == 0, || p.stderr.clone())?;
    let cli_months: f64 = p
        .stdout
        .lines()
        .find_map(|l| l.strip_prefix("predicted_months: "))
        .ok_or("no predicted_months line")?
        .parse()
        .map_err(|e| format!("{e}"))?;

    let intercept = model.artifact.model.intercept;
    let app = router(model, None);
    let rt = tokio::runtime::Runtime::new().unwrap();
    let (api_months, empty_status) = rt.block_on(async {
        let body = serde_json::json!({ "text": text }).to_string();
        let res = app
            .clone()
            .oneshot(
                Request::post("/api/v1/predict")
                    .header("content-type", "application/json")
                    .body(Body::from(body))
                    .unwrap(),
            )
            .await
            .unwrap();
        assert_eq!(res.status(), StatusCode::OK);
        let bytes = res.into_body().collect().await.unwrap().to_bytes();
        let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        let months = v["predicted_months"].as_f64().unwrap();
        let empty = app
            .oneshot(
                Request::post("/api/v1/predict")
                    .header("content-type", "application/json")
                    .body(Body::from(r#"{"text": ""}"#))
                    .unwrap(),
            )
            .await
            .unwrap();
        (months, empty.status())
    });
    ensure(api_months.to_bits() == cli_months.to_bits(), || {
        format!("service {api_months:?} vs cli {cli_months:?}")
    })?;
    ensure(api_months != intercept, || {
        "document predicted the bare intercept".into()
    })?;
    ensure(empty_status == StatusCode::BAD_REQUEST, || {
        format!("empty text gave {empty_status}")
    })?;
    Ok(format!(
        "service and CLI agree on {api_months:?} months; empty text -> 400"
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("tf-idf oracle equivalence", tfidf_oracle),
        ("idf spot values", idf_spot_values),
        ("loss and gradient", loss_and_gradient),
        ("planted-model recovery", planted_recovery),
        ("L1 sparsity", l1_sparsity),
        ("split exactness", split_exactness),
        ("determinism", determinism),
        ("explanation consistency", explanation_consistency),
        ("service round-trip", service_round_trip),
    ];
    let mut results = BTreeMap::new();
    for (name, check) in criteria {
        let outcome = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(r) => r,
            Err(p) => Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into())),
        };
        match &outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => println!("FAIL  {name}: {why}"),
        }
        results.insert(name, outcome.is_ok());
    }
    let failed = results.values().filter(|ok| !**ok).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
