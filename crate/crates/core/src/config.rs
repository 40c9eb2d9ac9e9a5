//! Key-value run configuration.
//!
//! ```text
//! # comments and blank lines are ignored
//! seed = 7
//! alpha = 0.001
//! leakage_phrases = home detention; community detention
//! stop_words_file = stopwords.txt   # relative to the config file
//! ```
//!
//! Unknown keys are rejected. `to_text` writes every key, so the snapshot in
//! a run manifest can be fed back as a config file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{read_stop_words, CleaningConfig, SplitSpec};
use crate::error::{Error, Result};
use crate::features::VocabConfig;
use crate::sgd::TrainConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub cleaning: CleaningConfig,
    pub stop_words_file: Option<PathBuf>,
    pub split: SplitSpec,
    pub vocab: VocabConfig,
    pub train: TrainConfig,
}

fn parse_value<T: FromStr>(path: &Path, line: usize, key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::parse(path, format!("line {line}: bad value for `{key}`: {e}")))
}

impl RunConfig {
    /// Sets the seed used for both the split and the SGD example order.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.split.seed = seed;
        self.train.seed = seed;
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Parses `text`; `path` anchors relative file references and error messages.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| {
                    Error::parse(path, format!("line {line_no}: expected `key = value`"))
                })?;
            let p = |v: &str| -> Result<f64> { parse_value(path, line_no, key, v) };
            match key {
                "seed" => cfg.set_seed(parse_value(path, line_no, key, value)?),
                "train_fraction" => cfg.split.train_fraction = p(value)?,
                "val_fraction" => cfg.split.val_fraction = p(value)?,
                "test_fraction" => cfg.split.test_fraction = p(value)?,
                "min_df" => cfg.vocab.min_df = parse_value(path, line_no, key, value)?,
                "max_df_ratio" => cfg.vocab.max_df_ratio = p(value)?,
                "ngram_min" => cfg.vocab.n_min = parse_value(path, line_no, key, value)?,
                "ngram_max" => cfg.vocab.n_max = parse_value(path, line_no, key, value)?,
                "epsilon" => cfg.train.epsilon = p(value)?,
                "alpha" => cfg.train.alpha = p(value)?,
                "max_epochs" => cfg.train.max_epochs = parse_value(path, line_no, key, value)?,
                "eta0" => cfg.train.eta0 = p(value)?,
                "power_t" => cfg.train.power_t = p(value)?,
                "early_stop_patience" => {
                    cfg.train.early_stop_patience = parse_value(path, line_no, key, value)?
                }
                "early_stop_tol" => cfg.train.early_stop_tol = p(value)?,
                "assault_domain" => {
                    cfg.cleaning.assault_domain = parse_value(path, line_no, key, value)?
                }
                "leakage_phrases" => {
                    cfg.cleaning.leakage_phrases = value
                        .split(';')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(str::to_string)
                        .collect()
                }
                "stop_words_file" => {
                    let base = path.parent().unwrap_or(Path::new("."));
                    let file = base.join(value);
                    cfg.cleaning.stop_words = read_stop_words(&file)?;
                    cfg.stop_words_file = Some(file);
                }
                other => {
                    return Err(Error::parse(
                        path,
                        format!("line {line_no}: unknown key `{other}`"),
                    ))
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "train_fraction = {}", self.split.train_fraction);
        let _ = writeln!(s, "val_fraction = {}", self.split.val_fraction);
        let _ = writeln!(s, "test_fraction = {}", self.split.test_fraction);
        let _ = writeln!(s, "min_df = {}", self.vocab.min_df);
        let _ = writeln!(s, "max_df_ratio = {}", self.vocab.max_df_ratio);
        let _ = writeln!(s, "ngram_min = {}", self.vocab.n_min);
        let _ = writeln!(s, "ngram_max = {}", self.vocab.n_max);
        let _ = writeln!(s, "epsilon = {}", self.train.epsilon);
        let _ = writeln!(s, "alpha = {}", self.train.alpha);
        let _ = writeln!(s, "max_epochs = {}", self.train.max_epochs);
        let _ = writeln!(s, "eta0 = {}", self.train.eta0);
        let _ = writeln!(s, "power_t = {}", self.train.power_t);
        let _ = writeln!(
            s,
            "early_stop_patience = {}",
            self.train.early_stop_patience
        );
        let _ = writeln!(s, "early_stop_tol = {}", self.train.early_stop_tol);
        let _ = writeln!(s, "assault_domain = {}", self.cleaning.assault_domain);
        let _ = writeln!(
            s,
            "leakage_phrases = {}",
            self.cleaning.leakage_phrases.join("; ")
        );
        if let Some(f) = &self.stop_words_file {
            let _ = writeln!(s, "stop_words_file = {}", f.display());
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_from_empty_file() {
        let cfg = RunConfig::parse("# nothing\n\n", Path::new("x.conf")).unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn parses_and_round_trips() {
        let text = "seed = 7\nalpha = 0.01 # stronger\nmax_epochs=50\n\
                    leakage_phrases = home detention ; parole\nassault_domain = true\nngram_max = 2\n";
        let cfg = RunConfig::parse(text, Path::new("x.conf")).unwrap();
        assert_eq!(cfg.split.seed, 7);
        assert_eq!(cfg.train.seed, 7);
        assert_eq!(cfg.train.alpha, 0.01);
        assert_eq!(cfg.train.max_epochs, 50);
        assert_eq!(cfg.vocab.n_max, 2);
        assert!(cfg.cleaning.assault_domain);
        assert_eq!(cfg.cleaning.leakage_phrases, ["home detention", "parole"]);
        let again = RunConfig::parse(&cfg.to_text(), Path::new("x.conf")).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn stop_words_file_is_relative_to_config() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("sw.txt"), "foo\nbar\n").unwrap();
        let conf = dir.path().join("run.conf");
        std::fs::write(&conf, "stop_words_file = sw.txt\n").unwrap();
        let cfg = RunConfig::read(&conf).unwrap();
        assert_eq!(cfg.cleaning.stop_words.len(), 2);
        assert_eq!(cfg.cleaning.clean("foo the bar baz"), "the baz");
    }

    #[test]
    fn errors_name_the_line() {
        let err = RunConfig::parse("alpha = 1\nbogus = 3\n", Path::new("r.conf")).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = RunConfig::parse("alpha = lots\n", Path::new("r.conf")).unwrap_err();
        assert!(err.to_string().contains("alpha"), "{err}");
        assert!(RunConfig::parse("no equals sign\n", Path::new("r.conf")).is_err());
    }
}
