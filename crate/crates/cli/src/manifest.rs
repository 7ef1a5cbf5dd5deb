use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Record of one successful run: configuration, input and output digests.
/// Diagnostics (logs, timing) are listed without digests because they are
/// not expected to repeat byte-for-byte.
#[derive(Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub diagnostics: Vec<String>,
    pub warnings: Value,
    pub wall_clock_seconds: f64,
    #[serde(skip)]
    started: Option<Instant>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

impl RunManifest {
    pub fn start(command: &str, config: Value) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            diagnostics: Vec::new(),
            warnings: Value::Object(Default::default()),
            wall_clock_seconds: 0.0,
            started: Some(Instant::now()),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<()> {
        self.outputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn diagnostic(&mut self, path: &Path) {
        self.diagnostics.push(path.display().to_string());
    }

    pub fn warn(&mut self, key: &str, value: impl Into<Value>) {
        if let Value::Object(map) = &mut self.warnings {
            map.insert(key.to_string(), value.into());
        }
    }

    pub fn finish(mut self, path: &Path) -> Result<()> {
        if let Some(t) = self.started.take() {
            self.wall_clock_seconds = t.elapsed().as_secs_f64();
        }
        let json = serde_json::to_string_pretty(&self)?;
        fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))
    }
}

/// `<file>.manifest.json` next to a single-file output.
pub fn manifest_path_for(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    output.with_file_name(name)
}
