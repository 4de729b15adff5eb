use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sse_core::{derive_constants, DerivedConstants};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: RunConfig,
    /// SHA-256 of `config.json`, cited by every data file.
    pub config_sha256: String,
    pub derived: DerivedConstants,
    pub started: String,
    pub finished: Option<String>,
    pub code_version: String,
    /// Worker threads used; results do not depend on it.
    pub threads: usize,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
}

impl RunManifest {
    pub fn new(config: &RunConfig, threads: usize) -> CliResult<Self> {
        Ok(Self {
            command: config.experiment.name().to_string(),
            config: config.clone(),
            config_sha256: config.sha256(),
            derived: derive_constants(&config.params)?,
            started: now(),
            finished: None,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            threads,
            outputs: Vec::new(),
            warnings: Vec::new(),
        })
    }

    /// Writes `config.json` and the manifest. Called before any result and
    /// again when the run completes.
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let cfg = dir.join(CONFIG_FILE);
        fs::write(&cfg, self.config.canonical_json()).map_err(CliError::io(&cfg))?;
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(CliError::io(&path))
    }

    pub fn finish(&mut self) {
        self.finished = Some(now());
    }

    /// Loads a manifest and checks that its hash matches its config.
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(CliError::io(path))?;
        let m: RunManifest =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let actual = m.config.sha256();
        if actual != m.config_sha256 {
            return Err(CliError::Config(format!(
                "{}: config hash {actual} does not match recorded {}",
                path.display(),
                m.config_sha256
            )));
        }
        Ok(m)
    }

    pub fn default_dir(path: &Path) -> PathBuf {
        path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."))
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}
