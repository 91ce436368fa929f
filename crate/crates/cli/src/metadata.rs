use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::error::{io_error, CliError};

/// Per-command metadata file name. The only artifact carrying timestamps.
pub fn metadata_file(command: &str) -> String {
    format!("run_metadata_{command}.json")
}

#[derive(Debug, Serialize)]
struct RunMetadata<'a> {
    command: &'a str,
    seed: Option<u64>,
    threads: usize,
    versions: BTreeMap<&'static str, String>,
    /// Effective options after merging flags and config.
    options: &'a Value,
    started_unix: f64,
    wall_seconds: f64,
}

/// Clock started when a command begins.
pub struct RunClock {
    started: SystemTime,
    instant: Instant,
}

impl RunClock {
    pub fn start() -> Self {
        Self {
            started: SystemTime::now(),
            instant: Instant::now(),
        }
    }

    pub fn elapsed(&self) -> f64 {
        self.instant.elapsed().as_secs_f64()
    }

    pub fn write(&self, dir: &Path, command: &str, seed: Option<u64>, threads: usize, options: &Value) -> Result<PathBuf, CliError> {
        let versions = BTreeMap::from([
            ("pkde", env!("CARGO_PKG_VERSION").to_string()),
            ("manifest_format", pkde_core::manifest::FORMAT_VERSION.to_string()),
        ]);
        let meta = RunMetadata {
            command,
            seed,
            threads,
            versions,
            options,
            started_unix: self.started.duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64()),
            wall_seconds: self.elapsed(),
        };
        let path = dir.join(metadata_file(command));
        let text = serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n";
        std::fs::write(&path, text).map_err(|e| io_error(&path, e))?;
        Ok(path)
    }
}
