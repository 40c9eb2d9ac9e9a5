//! Explainable sentence-length regression over court decision text.
//!
//! The pipeline cleans decision texts of label-leaking content, represents
//! them as 1-3-gram tf-idf vectors, and fits a sparse linear model with SGD on
//! an epsilon-insensitive squared loss under L1. Because the model is linear,
//! every prediction decomposes exactly into per-phrase contributions.
//!
//! ```no_run
//! use sentencelens::model_file::ModelArtifact;
//!
//! let model = ModelArtifact::load("model.json".as_ref())?;
//! let months = model.artifact.predict_text("The offender pleaded guilty to aggravated assault.")?;
//! # Ok::<(), sentencelens::Error>(())
//! ```

pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod explain;
pub mod features;
pub mod model_file;
pub mod pipeline;
pub mod rng;
pub mod service;
pub mod sgd;
pub mod synth;

pub use error::{Error, Result};
