//! HTTP API over one immutable model, loaded at startup.
//!
//! Every response carries the model file's SHA-256 in the `x-model-hash`
//! header; JSON bodies also repeat it as `model_hash` next to a fixed
//! disclaimer.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Query, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::services::ServeDir;

use crate::corpus::ASSAULT_MAX_MONTHS;
use crate::error::Result;
use crate::explain::{Contribution, PhraseInfluence, DEFAULT_TOP_K};
use crate::model_file::{LoadedModel, FORMAT_VERSION};

pub const DISCLAIMER: &str = "research prototype; not legal advice";
pub const MAX_BODY_BYTES: usize = 1 << 20;
pub const MODEL_HASH_HEADER: &str = "x-model-hash";

/// Tolerance for the server-side `intercept + sum = prediction` check.
const SUM_TOLERANCE: f64 = 1e-9;

/// `"23 months (1 year 11 months)"`; whole months, rounded.
pub fn render_months(months: f64) -> String {
    // `+ 0.0` turns -0 into 0.
    let m = months.round() + 0.0;
    if m < 12.0 {
        return format!("{m} {}", if m == 1.0 { "month" } else { "months" });
    }
    let total = m as u64;
    let (years, rest) = (total / 12, total % 12);
    let years_s = format!("{years} {}", if years == 1 { "year" } else { "years" });
    if rest == 0 {
        format!("{total} months ({years_s})")
    } else {
        let rest_s = format!("{rest} {}", if rest == 1 { "month" } else { "months" });
        format!("{total} months ({years_s} {rest_s})")
    }
}

/// Outside the 0 to 14.5 year range observed for assault sentences.
pub fn out_of_range(months: f64) -> bool {
    !(0.0..=ASSAULT_MAX_MONTHS).contains(&months)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictRequest {
    pub text: String,
    #[serde(default)]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub predicted_months: f64,
    pub predicted_display: String,
    pub out_of_range: bool,
    pub intercept: f64,
    pub contributions: Vec<Contribution>,
    pub contribution_total: f64,
    pub oov_note: bool,
    pub model_hash: String,
    pub disclaimer: String,
}

#[derive(Debug)]
pub enum PredictError {
    EmptyText,
    /// `intercept + contribution_total` disagreed with the prediction.
    Invariant(String),
    Model(crate::error::Error),
}

impl std::fmt::Display for PredictError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PredictError::EmptyText => f.write_str("text must be non-empty"),
            PredictError::Invariant(m) => write!(f, "internal invariant violated: {m}"),
            PredictError::Model(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for PredictError {}

impl PredictResponse {
    /// The single prediction path shared by the HTTP handler and the CLI.
    pub fn build(model: &LoadedModel, text: &str, k: usize) -> Result<Self, PredictError> {
        if text.trim().is_empty() {
            return Err(PredictError::EmptyText);
        }
        let e = model
            .artifact
            .explain_text(text, k)
            .map_err(PredictError::Model)?;
        let reconstructed = e.intercept + e.contribution_total;
        if (reconstructed - e.prediction).abs() > SUM_TOLERANCE {
            return Err(PredictError::Invariant(format!(
                "intercept + contributions = {reconstructed}, prediction = {}",
                e.prediction
            )));
        }
        Ok(PredictResponse {
            predicted_months: e.prediction,
            predicted_display: render_months(e.prediction),
            out_of_range: out_of_range(e.prediction),
            intercept: e.intercept,
            oov_note: e.n_features == 0,
            contributions: e.contributions,
            contribution_total: e.contribution_total,
            model_hash: model.content_hash.clone(),
            disclaimer: DISCLAIMER.to_string(),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GlobalResponse {
    pub k: usize,
    pub top_positive: Vec<PhraseInfluence>,
    pub top_negative: Vec<PhraseInfluence>,
    pub model_hash: String,
    pub disclaimer: String,
}

#[derive(Clone)]
struct AppState {
    model: Arc<LoadedModel>,
}

fn error_body(status: StatusCode, message: impl std::fmt::Display) -> Response {
    (
        status,
        Json(json!({ "error": message.to_string(), "disclaimer": DISCLAIMER })),
    )
        .into_response()
}

async fn handle_predict(State(state): State<AppState>, body: Bytes) -> Response {
    let req: PredictRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error_body(StatusCode::BAD_REQUEST, format!("malformed JSON: {e}")),
    };
    let k = req.k.unwrap_or(DEFAULT_TOP_K);
    match PredictResponse::build(&state.model, &req.text, k) {
        Ok(resp) => Json(resp).into_response(),
        Err(PredictError::EmptyText) => {
            error_body(StatusCode::BAD_REQUEST, PredictError::EmptyText)
        }
        Err(e) => error_body(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

#[derive(Deserialize)]
struct GlobalQuery {
    k: Option<String>,
}

async fn handle_global(State(state): State<AppState>, Query(q): Query<GlobalQuery>) -> Response {
    let k = match q.k.as_deref().map(str::parse::<usize>) {
        None => DEFAULT_TOP_K,
        Some(Ok(k)) if k >= 1 => k,
        Some(_) => return error_body(StatusCode::BAD_REQUEST, "k must be a positive integer"),
    };
    let r = state.model.artifact.global_ranking(k);
    Json(GlobalResponse {
        k,
        top_positive: r.top_positive,
        top_negative: r.top_negative,
        model_hash: state.model.content_hash.clone(),
        disclaimer: DISCLAIMER.to_string(),
    })
    .into_response()
}

async fn handle_model_summary(State(state): State<AppState>) -> Response {
    let a = &state.model.artifact;
    Json(json!({
        "format_version": FORMAT_VERSION,
        "vocabulary_size": a.vocabulary.len(),
        "n_docs": a.vocabulary.n_docs(),
        "nonzero_weights": a.model.nonzero_weights(),
        "intercept": a.model.intercept,
        "metrics": a.metrics,
        "training": {
            "epochs_run": a.model.epochs_run,
            "stopped_early": a.model.stopped_early,
            "best_epoch": a.model.best_epoch,
        },
        "config": {
            "train": a.model.config,
            "vocabulary": a.vocab_config,
            "leakage_phrases": a.cleaning.leakage_phrases,
            "assault_domain": a.cleaning.assault_domain,
            "stop_words_hash": a.cleaning.stop_words_hash(),
        },
        "model_hash": state.model.content_hash,
        "disclaimer": DISCLAIMER,
    }))
    .into_response()
}

async fn healthz() -> &'static str {
    "ok"
}

async fn no_ui() -> Response {
    (
        StatusCode::NOT_FOUND,
        "what-if UI not installed; start with --ui-dir to serve it\n",
    )
        .into_response()
}

/// Builds the application router. `ui_dir`, when given, is served at `/`.
pub fn router(model: LoadedModel, ui_dir: Option<PathBuf>) -> Router {
    let hash = HeaderValue::from_str(&model.content_hash).expect("hex hash is a valid header");
    let state = AppState {
        model: Arc::new(model),
    };
    let api = Router::new()
        .route("/api/v1/predict", post(handle_predict))
        .route("/api/v1/explain/global", get(handle_global))
        .route("/api/v1/model", get(handle_model_summary))
        .route("/healthz", get(healthz))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(state);
    let app = match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(no_ui)),
    };
    app.layer(axum::middleware::map_response(move |mut res: Response| {
        let hash = hash.clone();
        async move {
            res.headers_mut().insert(MODEL_HASH_HEADER, hash);
            res
        }
    }))
}

/// Binds and serves until ctrl-c.
pub async fn serve(
    model: LoadedModel,
    addr: SocketAddr,
    ui_dir: Option<PathBuf>,
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(model, ui_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
