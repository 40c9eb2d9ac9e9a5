//! Command-line front end: `train`, `predict`, `explain`, `synth`, `serve`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 training failure.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::corpus::{read_corpus_dir, read_labels};
use crate::error::Error;
use crate::explain::{
    write_contributions_csv, write_ranking_csv, write_scatter_csv, DEFAULT_TOP_K,
};
use crate::model_file::{sha256_hex, write_atomic, ModelArtifact};
use crate::pipeline::train_pipeline;
use crate::service::{out_of_range, render_months, PredictError, PredictResponse};
use crate::synth::{generate, SynthConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_TRAINING: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "sentencelens",
    version,
    about = "Explainable sentence-length regression over court decision text"
)]
pub struct Cli {
    /// Seed for splitting, SGD example order and corpus synthesis.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Key-value config file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output format for tabular results.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Output path: model file for `train`, directory for `synth`, file for `predict` and `explain`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split, fit, train and evaluate; write model, metrics and manifest.
    Train {
        /// Directory of `<id>.txt` decisions.
        #[arg(long)]
        corpus: PathBuf,
        /// Labels CSV (`id,sentence_months`); defaults to `<corpus>/labels.csv`.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        max_epochs: Option<usize>,
        #[arg(long)]
        eta0: Option<f64>,
        #[arg(long)]
        assault_domain: bool,
    },
    /// Predict the sentence for one decision text (file or stdin).
    Predict {
        #[arg(long)]
        model: PathBuf,
        text_file: Option<PathBuf>,
    },
    /// Global phrase rankings, or a per-document breakdown when a text file is given.
    Explain {
        #[arg(long)]
        model: PathBuf,
        text_file: Option<PathBuf>,
        #[arg(short, long, default_value_t = DEFAULT_TOP_K)]
        k: usize,
    },
    /// Write a synthetic corpus generated from a planted sparse linear model.
    Synth {
        #[arg(long, default_value_t = 300)]
        n_docs: usize,
        #[arg(long, default_value_t = 30)]
        vocab_size: usize,
        #[arg(long, default_value_t = 0.3)]
        sparsity: f64,
        #[arg(long, default_value_t = 1.0)]
        noise_sigma: f64,
    },
    /// Serve the prediction API over a model.
    Serve {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
        /// Built what-if UI to serve at `/`.
        #[arg(long)]
        ui_dir: Option<PathBuf>,
    },
}

#[derive(Debug)]
struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn data(message: impl std::fmt::Display) -> Self {
        CliError {
            code: EXIT_DATA,
            message: message.to_string(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Diverged { .. } | Error::InvalidConfig(_) => EXIT_TRAINING,
            _ => EXIT_DATA,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::data(e)
    }
}

type CliResult = Result<(), CliError>;

/// Reads one of the standard I/O streams; injected so tests can drive the CLI.
pub struct Io<'a> {
    pub stdout: &'a mut dyn Write,
    pub stderr: &'a mut dyn Write,
    pub stdin: &'a mut dyn Read,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, io: &mut Io<'_>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = if code == EXIT_OK {
                write!(io.stdout, "{e}")
            } else {
                write!(io.stderr, "{e}")
            };
            return code;
        }
    };
    match dispatch(cli, io) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(io.stderr, "error: {}", e.message);
            e.code
        }
    }
}

fn dispatch(cli: Cli, io: &mut Io<'_>) -> CliResult {
    let format = cli.format.unwrap_or(Format::Json);
    match cli.command {
        Command::Train {
            corpus,
            labels,
            alpha,
            epsilon,
            max_epochs,
            eta0,
            assault_domain,
        } => {
            let mut config = match &cli.config {
                Some(p) => RunConfig::read(p)?,
                None => RunConfig::default(),
            };
            if let Some(seed) = cli.seed {
                config.set_seed(seed);
            }
            if let Some(v) = alpha {
                config.train.alpha = v;
            }
            if let Some(v) = epsilon {
                config.train.epsilon = v;
            }
            if let Some(v) = max_epochs {
                config.train.max_epochs = v;
            }
            if let Some(v) = eta0 {
                config.train.eta0 = v;
            }
            config.cleaning.assault_domain |= assault_domain;
            let out = cli
                .out
                .ok_or_else(|| CliError::usage("train requires --out <model.json>"))?;
            let labels = labels.unwrap_or_else(|| corpus.join("labels.csv"));
            cmd_train(
                &corpus,
                &labels,
                &config,
                cli.config.as_deref(),
                &out,
                format,
                io,
            )
        }
        Command::Predict { model, text_file } => cmd_predict(
            &model,
            text_file.as_deref(),
            format,
            cli.format.is_some(),
            cli.out.as_deref(),
            io,
        ),
        Command::Explain {
            model,
            text_file,
            k,
        } => {
            if k == 0 {
                return Err(CliError::usage("-k must be at least 1"));
            }
            cmd_explain(
                &model,
                text_file.as_deref(),
                k,
                format,
                cli.out.as_deref(),
                io,
            )
        }
        Command::Synth {
            n_docs,
            vocab_size,
            sparsity,
            noise_sigma,
        } => {
            let out = cli
                .out
                .ok_or_else(|| CliError::usage("synth requires --out <dir>"))?;
            let config = SynthConfig {
                n_docs,
                vocab_size,
                sparsity,
                noise_sigma,
                seed: cli.seed.unwrap_or(0),
                ..SynthConfig::default()
            };
            cmd_synth(&config, &out, io)
        }
        Command::Serve {
            model,
            port,
            bind,
            ui_dir,
        } => {
            let loaded = ModelArtifact::load(&model)?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(crate::service::serve(
                loaded,
                SocketAddr::new(bind, port),
                ui_dir,
            ))?;
            Ok(())
        }
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into());
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(CliError::data)?;
    bytes.push(b'\n');
    Ok(bytes)
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    tool_version: &'a str,
    seed: Option<u64>,
    config: serde_json::Value,
    inputs: serde_json::Value,
    outputs: serde_json::Value,
    timings_ms: serde_json::Value,
    metrics: serde_json::Value,
}

fn write_manifest(path: &Path, manifest: &RunManifest<'_>) -> Result<(), CliError> {
    write_atomic(path, &json_bytes(manifest)?)?;
    Ok(())
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// `<out>` model, `<stem>.metrics.json`, `<stem>.scatter.{json|csv}` and
/// `<stem>.manifest.json`. Everything except the manifest is deterministic.
fn cmd_train(
    corpus_dir: &Path,
    labels_path: &Path,
    config: &RunConfig,
    config_path: Option<&Path>,
    out: &Path,
    format: Format,
    io: &mut Io<'_>,
) -> CliResult {
    let start = Instant::now();
    if !corpus_dir.is_dir() {
        return Err(CliError::data(format!(
            "{}: corpus directory not found",
            corpus_dir.display()
        )));
    }
    if !labels_path.is_file() {
        return Err(CliError::data(format!(
            "{}: labels file not found",
            labels_path.display()
        )));
    }
    let documents = read_corpus_dir(corpus_dir)?;
    let labels = read_labels(labels_path)?;
    let load_ms = ms(start);

    let fit_start = Instant::now();
    let outcome = train_pipeline(&documents, &labels, config)?;
    let fit_ms = ms(fit_start);

    let model_bytes = outcome.artifact.to_json_bytes()?;
    let metrics_path = sibling(out, "metrics.json");
    let scatter_path = sibling(
        out,
        match format {
            Format::Csv => "scatter.csv",
            Format::Json => "scatter.json",
        },
    );
    let manifest_path = sibling(out, "manifest.json");
    let m = &outcome.metrics;
    let metrics_json = json!({
        "train": m.train,
        "val": m.val,
        "test": m.test,
        "epochs_run": outcome.artifact.model.epochs_run,
        "best_epoch": outcome.artifact.model.best_epoch,
        "stopped_early": outcome.artifact.model.stopped_early,
        "vocabulary_size": outcome.artifact.vocabulary.len(),
        "nonzero_weights": outcome.artifact.model.nonzero_weights(),
        "split_sizes": {
            "train": outcome.split.train.len(),
            "val": outcome.split.val.len(),
            "test": outcome.split.test.len(),
        },
    });
    let scatter_bytes = match format {
        Format::Json => json_bytes(&outcome.scatter)?,
        Format::Csv => {
            let mut buf = Vec::new();
            write_scatter_csv(&mut buf, &outcome.scatter)?;
            buf
        }
    };
    write_atomic(out, &model_bytes)?;
    write_atomic(&metrics_path, &json_bytes(&metrics_json)?)?;
    write_atomic(&scatter_path, &scatter_bytes)?;

    for (name, e) in [("train", &m.train), ("val", &m.val), ("test", &m.test)] {
        let r2 = if e.r_squared_defined() {
            format!("{:.4}", e.r_squared)
        } else {
            "undefined".to_string()
        };
        writeln!(
            io.stdout,
            "{name:<5} n={:<4} MAE={:.4} months  R2={r2}",
            e.n, e.mae
        )?;
    }
    writeln!(
        io.stdout,
        "epochs={} best_epoch={} stopped_early={} vocabulary={} nonzero_weights={}",
        outcome.artifact.model.epochs_run,
        outcome.artifact.model.best_epoch,
        outcome.artifact.model.stopped_early,
        outcome.artifact.vocabulary.len(),
        outcome.artifact.model.nonzero_weights(),
    )?;
    writeln!(io.stdout, "model written to {}", out.display())?;

    write_manifest(
        &manifest_path,
        &RunManifest {
            command: "train",
            tool_version: env!("CARGO_PKG_VERSION"),
            seed: Some(config.seed),
            config: json!({ "snapshot": config.to_text(), "file": config_path }),
            inputs: json!({ "corpus_dir": corpus_dir, "labels": labels_path, "n_documents": documents.len() }),
            outputs: json!({
                "model": out,
                "model_sha256": sha256_hex(&model_bytes),
                "metrics": metrics_path,
                "scatter": scatter_path,
            }),
            timings_ms: json!({ "load": load_ms, "fit": fit_ms, "total": ms(start) }),
            metrics: metrics_json,
        },
    )
}

fn read_text(text_file: Option<&Path>, io: &mut Io<'_>) -> Result<String, CliError> {
    match text_file {
        Some(p) => {
            std::fs::read_to_string(p).map_err(|e| CliError::data(format!("{}: {e}", p.display())))
        }
        None => {
            let mut s = String::new();
            io.stdin.read_to_string(&mut s)?;
            Ok(s)
        }
    }
}

fn cmd_predict(
    model_path: &Path,
    text_file: Option<&Path>,
    format: Format,
    format_given: bool,
    out: Option<&Path>,
    io: &mut Io<'_>,
) -> CliResult {
    let start = Instant::now();
    let model = ModelArtifact::load(model_path)?;
    let text = read_text(text_file, io)?;
    let resp = PredictResponse::build(&model, &text, DEFAULT_TOP_K).map_err(|e| match e {
        PredictError::EmptyText => CliError::data("input text is empty"),
        other => CliError::data(other),
    })?;
    if let Some(path) = out {
        write_atomic(path, &json_bytes(&resp)?)?;
        write_manifest(
            &sibling(path, "manifest.json"),
            &RunManifest {
                command: "predict",
                tool_version: env!("CARGO_PKG_VERSION"),
                seed: None,
                config: json!({}),
                inputs: json!({ "model": model_path, "model_sha256": model.content_hash, "text_file": text_file }),
                outputs: json!({ "prediction": path }),
                timings_ms: json!({ "total": ms(start) }),
                metrics: json!(model.artifact.metrics),
            },
        )?;
    }
    if format_given && format == Format::Json {
        io.stdout.write_all(&json_bytes(&resp)?)?;
        return Ok(());
    }
    // `{}` on f64 prints the shortest round-trip representation.
    writeln!(io.stdout, "predicted_months: {}", resp.predicted_months)?;
    writeln!(
        io.stdout,
        "predicted: {}",
        render_months(resp.predicted_months)
    )?;
    if resp.oov_note {
        writeln!(
            io.stdout,
            "note: no known phrases in the text; prediction is the intercept"
        )?;
    }
    if out_of_range(resp.predicted_months) {
        writeln!(
            io.stdout,
            "warning: prediction outside the observed 0-174 month (0-14.5 year) range"
        )?;
    }
    Ok(())
}

fn cmd_explain(
    model_path: &Path,
    text_file: Option<&Path>,
    k: usize,
    format: Format,
    out: Option<&Path>,
    io: &mut Io<'_>,
) -> CliResult {
    let model = ModelArtifact::load(model_path)?;
    let a = &model.artifact;
    let mut buf = Vec::new();
    match text_file {
        None => {
            let r = a.global_ranking(k);
            match format {
                Format::Json => buf = json_bytes(&r)?,
                Format::Csv => {
                    writeln!(buf, "# top_positive")?;
                    write_ranking_csv(&mut buf, &r.top_positive)?;
                    writeln!(buf, "# top_negative")?;
                    write_ranking_csv(&mut buf, &r.top_negative)?;
                }
            }
        }
        Some(p) => {
            let text = read_text(Some(p), io)?;
            let e = a.explain_text(&text, k)?;
            match format {
                Format::Json => buf = json_bytes(&e)?,
                Format::Csv => {
                    writeln!(
                        buf,
                        "# prediction={} intercept={}",
                        e.prediction, e.intercept
                    )?;
                    write_contributions_csv(&mut buf, &e.contributions)?;
                }
            }
        }
    }
    match out {
        None => io.stdout.write_all(&buf)?,
        Some(path) => {
            write_atomic(path, &buf)?;
            write_manifest(
                &sibling(path, "manifest.json"),
                &RunManifest {
                    command: "explain",
                    tool_version: env!("CARGO_PKG_VERSION"),
                    seed: None,
                    config: json!({ "k": k, "format": format }),
                    inputs: json!({ "model": model_path, "model_sha256": model.content_hash, "text_file": text_file }),
                    outputs: json!({ "explanation": path }),
                    timings_ms: json!({}),
                    metrics: json!(a.metrics),
                },
            )?;
            writeln!(io.stdout, "explanation written to {}", path.display())?;
        }
    }
    Ok(())
}

fn cmd_synth(config: &SynthConfig, out: &Path, io: &mut Io<'_>) -> CliResult {
    let start = Instant::now();
    let corpus = generate(config)?;
    corpus.write(out)?;
    writeln!(
        io.stdout,
        "wrote {} documents ({} active of {} planted phrases) to {}",
        corpus.documents.len(),
        corpus.planted.active().count(),
        corpus.planted.terms.len(),
        out.display()
    )?;
    write_manifest(
        &out.join("manifest.json"),
        &RunManifest {
            command: "synth",
            tool_version: env!("CARGO_PKG_VERSION"),
            seed: Some(config.seed),
            config: json!(config),
            inputs: json!({}),
            outputs: json!({
                "corpus_dir": out,
                "labels": out.join("labels.csv"),
                "planted_model": out.join(crate::synth::PLANTED_MODEL_FILE),
            }),
            timings_ms: json!({ "total": ms(start) }),
            metrics: json!({}),
        },
    )
}
