#![allow(dead_code)]

use std::path::{Path, PathBuf};

use sentencelens::cli::{run, Io};

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the CLI in-process with `args` (program name excluded).
pub fn cli(args: &[&str], stdin: &str) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut input = stdin.as_bytes();
    let code = run(
        std::iter::once("sentencelens").chain(args.iter().copied()),
        &mut Io {
            stdout: &mut out,
            stderr: &mut err,
            stdin: &mut input,
        },
    );
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes the default synthetic corpus under `root/corpus`.
pub fn synth_corpus(root: &Path) -> PathBuf {
    let dir = root.join("corpus");
    let o = cli(&["synth", "--out", s(&dir)], "");
    assert_eq!(o.code, 0, "{}", o.stderr);
    dir
}

/// Trains on `corpus` into `out`, with extra flags.
pub fn train(corpus: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["train", "--corpus", s(corpus), "--out", s(out)];
    args.extend_from_slice(extra);
    cli(&args, "")
}
