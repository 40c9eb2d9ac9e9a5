use std::io;
use std::process::ExitCode;

use sentencelens::cli::{run, Io};

fn main() -> ExitCode {
    let mut stdout = io::stdout().lock();
    let mut stderr = io::stderr().lock();
    let mut stdin = io::stdin().lock();
    let code = run(
        std::env::args_os(),
        &mut Io {
            stdout: &mut stdout,
            stderr: &mut stderr,
            stdin: &mut stdin,
        },
    );
    ExitCode::from(code as u8)
}
