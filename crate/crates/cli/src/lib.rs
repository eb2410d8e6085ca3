//! Batch experiment runner. Each subcommand resolves its configuration,
//! runs, and writes one report that embeds that configuration.

pub mod args;
mod games;
mod ldt;
mod report;
mod sdp;

use std::path::Path;

use serde::de::DeserializeOwned;

pub use args::{Cli, Command};
pub use games::{run_linearity, run_quadeq, run_value};
pub use ldt::run_ldt;
pub use report::{flatten, Report, TIMESTAMP_FIELD};
pub use sdp::{run_improve, run_metrics};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] twoprover::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Threads(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    /// 2 for usage errors, 1 for everything that fails at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text =
        std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    serde_json::from_str(&text).map_err(|e| twoprover::Error::Parse(format!("{}: {e}", path.display())).into())
}

/// The seed, or a usage error naming what needs it.
pub(crate) fn need_seed(seed: Option<u64>, what: &str) -> CliResult<u64> {
    seed.ok_or_else(|| usage(format!("{what} is randomized and needs --seed")))
}

/// Runs the command on a pool of `--threads` workers and returns the
/// rendered report.
pub fn execute(cli: &Cli) -> CliResult<String> {
    let run = || -> CliResult<String> {
        match &cli.command {
            Command::Ldt(a) => run_ldt(a),
            Command::Linearity(a) => run_linearity(a),
            Command::Quadeq(a) => run_quadeq(a),
            Command::Value(a) => run_value(a),
            Command::Improve(a) => run_improve(a),
            Command::Metrics(a) => run_metrics(a),
        }
    };
    match cli.command.common().threads {
        Some(0) => Err(usage("--threads must be positive")),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(run),
        None => run(),
    }
}

/// Executes and writes the report to `--out` or stdout.
pub fn run(cli: &Cli) -> CliResult<()> {
    let text = execute(cli)?;
    match &cli.command.common().out {
        Some(path) => report::write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
