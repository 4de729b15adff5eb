//! Command-line experiments on two oscillators coupled to a finite bath.
//!
//! Every run writes `config.json` and `manifest.json` before any result, so
//! an interrupted run is still identifiable, and each data file cites the
//! SHA-256 of the config that produced it.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod plot;

use std::path::PathBuf;

use serde_json::{json, Value};

use crate::args::Command;
use crate::error::{CliError, CliResult};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "SSE_LAB_THREADS";

/// Sizes the global pool from [`THREADS_ENV`] when set.
pub fn init_threads() -> CliResult<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
    #[cfg(feature = "parallel")]
    {
        // Fails only if the pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

/// Runs one command and returns the summary printed on stdout.
pub fn run(cmd: &Command) -> CliResult<Value> {
    let (config, dir): (_, PathBuf) = match cmd {
        Command::Rerun(a) => commands::configure_rerun(&a.manifest, a.out_dir.as_deref())?,
        other => commands::configure(other)?,
    };
    let (manifest, summary) = commands::execute(&config, &dir)?;
    Ok(json!({
        "command": manifest.command,
        "out_dir": dir.display().to_string(),
        "config_sha256": manifest.config_sha256,
        "outputs": manifest.outputs,
        "warnings": manifest.warnings,
        "summary": summary,
    }))
}
