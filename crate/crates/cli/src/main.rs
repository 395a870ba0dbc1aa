mod args;
mod commands;
mod output;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

use args::{Cli, Format};
use commands::Rendered;

/// Exit 2: bad arguments. Exit 1: solver or domain failure. Exit 3: the
/// computation finished but failed its own check.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(subopt::Error),
    Verification(String),
    Io(std::io::Error),
}

impl From<subopt::Error> for CliError {
    fn from(e: subopt::Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Lib(subopt::Error::Unverified { .. }) | CliError::Verification(_) => 3,
            CliError::Lib(_) | CliError::Io(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Lib(subopt::Error::Unverified { .. }) | CliError::Verification(_) => {
                "verification"
            }
            CliError::Lib(_) => "computation",
            CliError::Io(_) => "io",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) | CliError::Verification(m) => m.clone(),
            CliError::Lib(e) => e.to_string(),
            CliError::Io(e) => e.to_string(),
        }
    }
}

fn report(err: &CliError) -> ExitCode {
    let body = json!({"error": {"kind": err.kind(), "message": err.message(), "exit_code": err.code()}});
    eprint!("{}", output::render_json(&body, 5));
    ExitCode::from(err.code())
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("SUBOPT_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Usage(format!("SUBOPT_THREADS={v:?} is not a positive integer")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let precision = cli.precision;
    let outcome = commands::run(cli.command)?;
    let format = cli.format.unwrap_or(outcome.default_format);
    let text = match (outcome.body, format) {
        (Rendered::Json(v), Format::Json) | (Rendered::Either { json: v, .. }, Format::Json) => {
            output::render_json(&v, precision)
        }
        (Rendered::Either { table: t, .. }, Format::Csv) => output::render_table(&t, precision),
        (Rendered::Json(_), Format::Csv) => {
            return Err(CliError::Usage("this command has no CSV output".into()))
        }
    };
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(CliError::Io)?,
        None => std::io::stdout().write_all(text.as_bytes()).map_err(CliError::Io)?,
    }
    match outcome.verification_failure {
        Some(m) => Err(CliError::Verification(m)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            return report(&CliError::Usage(first.trim_start_matches("error: ").to_string()));
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}
