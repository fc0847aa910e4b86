use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

/// Provenance record written next to every command's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub tool_version: &'static str,
    pub parallel: bool,
    pub seed: Option<u64>,
    pub config: Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub duration_s: f64,
}

pub struct ManifestBuilder {
    started: Instant,
    manifest: RunManifest,
}

impl ManifestBuilder {
    pub fn new(command: &str) -> Self {
        Self {
            started: Instant::now(),
            manifest: RunManifest {
                command: command.to_owned(),
                argv: std::env::args().collect(),
                tool_version: env!("CARGO_PKG_VERSION"),
                parallel: photac_core::par::is_parallel(),
                seed: None,
                config: Value::Null,
                inputs: Vec::new(),
                outputs: Vec::new(),
                duration_s: 0.0,
            },
        }
    }

    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.manifest.seed = Some(seed);
        self
    }

    pub fn config(&mut self, config: impl Serialize) -> &mut Self {
        self.manifest.config = serde_json::to_value(config).unwrap_or(Value::Null);
        self
    }

    pub fn input(&mut self, path: &Path) -> &mut Self {
        self.manifest.inputs.push(path.to_path_buf());
        self
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.manifest.outputs.push(path.to_path_buf());
        self
    }

    /// Writes the manifest to `<primary output>.manifest.json` and returns its path.
    pub fn finish(mut self, primary: &Path) -> photac_core::Result<PathBuf> {
        self.manifest.duration_s = self.started.elapsed().as_secs_f64();
        let path = manifest_path(primary);
        std::fs::write(&path, serde_json::to_string_pretty(&self.manifest)? + "\n")?;
        Ok(path)
    }
}

/// `out.ppm` -> `out.ppm.manifest.json`; `dir/` -> `dir.manifest.json`.
pub fn manifest_path(primary: &Path) -> PathBuf {
    let trimmed = primary.components().as_path();
    let mut name = trimmed.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}
