//! Run manifests: one JSON record per command, written beside its outputs.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliResult;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Full argument vector; re-running it reproduces the outputs.
    pub argv: Vec<String>,
    pub config: Value,
    pub seeds: Vec<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub tool_version: String,
    pub started_unix_secs: u64,
    pub wall_time_secs: f64,
}

/// Collects manifest fields while a command runs.
pub struct ManifestBuilder {
    manifest: RunManifest,
    start: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, argv: &[String]) -> Self {
        let started = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            manifest: RunManifest {
                command: command.to_string(),
                argv: argv.to_vec(),
                config: Value::Null,
                seeds: Vec::new(),
                inputs: Vec::new(),
                outputs: Vec::new(),
                tool_version: TOOL_VERSION.to_string(),
                started_unix_secs: started,
                wall_time_secs: 0.0,
            },
            start: Instant::now(),
        }
    }

    pub fn config(&mut self, config: Value) -> &mut Self {
        self.manifest.config = config;
        self
    }

    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.manifest.seeds.push(seed);
        self
    }

    pub fn input(&mut self, p: impl Into<PathBuf>) -> &mut Self {
        self.manifest.inputs.push(p.into());
        self
    }

    pub fn output(&mut self, p: impl Into<PathBuf>) -> &mut Self {
        self.manifest.outputs.push(p.into());
        self
    }

    /// Stamp the wall time and write the manifest to `path`.
    pub fn finish(mut self, path: &Path) -> CliResult<RunManifest> {
        self.manifest.wall_time_secs = self.start.elapsed().as_secs_f64();
        std::fs::write(path, serde_json::to_string_pretty(&self.manifest)? + "\n")?;
        Ok(self.manifest)
    }
}

/// Manifest location for a single output file: `<file>.manifest.json`.
pub fn manifest_path_for(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    output.with_file_name(name)
}

pub fn read_manifest(path: &Path) -> CliResult<RunManifest> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}
