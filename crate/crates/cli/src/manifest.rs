use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

pub const MANIFEST_SUFFIX: &str = ".manifest.json";

/// Record of one command run: what was asked, what was written.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub config: Value,
    /// Written files, relative to the manifest's directory.
    pub artifacts: Vec<String>,
    /// Seconds since the epoch; `SOURCE_DATE_EPOCH` when set.
    pub timestamp: u64,
}

fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or_else(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs())
        })
}

fn relative(path: &Path, base: &Path) -> String {
    path.strip_prefix(base)
        .unwrap_or(path)
        .to_string_lossy()
        .replace('\\', "/")
}

impl Manifest {
    pub fn new(command: &str, seed: Option<u64>, config: Value) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            artifacts: Vec::new(),
            timestamp: timestamp(),
        }
    }

    /// Writes the manifest to `path`, listing `files` relative to its
    /// parent directory.
    pub fn write(mut self, path: &Path, files: &[PathBuf]) -> Result<(), CliError> {
        let base = path.parent().unwrap_or(Path::new(""));
        self.artifacts = files.iter().map(|f| relative(f, base)).collect();
        let mut text = serde_json::to_string_pretty(&self).map_err(|e| CliError::Data(e.to_string()))?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }
}

/// `<out><suffix>`, for sibling artifacts such as sidecars.
pub fn with_suffix(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    out.with_file_name(name)
}

/// `<out>.manifest.json` next to a single-file artifact.
pub fn manifest_path(out: &Path) -> PathBuf {
    with_suffix(out, MANIFEST_SUFFIX)
}
