use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

/// Record of one invocation, written next to its outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: &'static str,
    pub subcommand: &'static str,
    pub config_digest: String,
    pub seed: u64,
    pub started_unix_s: u64,
    pub finished_unix_s: u64,
    pub outputs: Vec<String>,
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn new(subcommand: &'static str, config_digest: String, seed: u64) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION"),
            subcommand,
            config_digest,
            seed,
            started_unix_s: unix_now(),
            finished_unix_s: 0,
            outputs: Vec::new(),
        }
    }

    pub fn record(&mut self, path: &Path) {
        let name = path.file_name().map(PathBuf::from).unwrap_or_else(|| path.to_path_buf());
        self.outputs.push(name.display().to_string());
    }

    /// Checks every listed output exists and is non-empty, then writes
    /// `manifest.json` into `dir`.
    pub fn finish(mut self, dir: &Path) -> std::io::Result<PathBuf> {
        for o in &self.outputs {
            let len = std::fs::metadata(dir.join(o))?.len();
            if len == 0 {
                return Err(std::io::Error::other(format!("output {o} is empty")));
            }
        }
        self.finished_unix_s = unix_now();
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self).map_err(std::io::Error::other)?;
        std::fs::write(&path, text + "\n")?;
        Ok(path)
    }
}
