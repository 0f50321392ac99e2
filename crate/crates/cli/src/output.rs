use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Writes `contents` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let fail =
        |e: std::io::Error| CliError::Numerical(format!("cannot write {}: {e}", path.display()));
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(fail)?;
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("output");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let mut file = fs::File::create(&tmp).map_err(fail)?;
    file.write_all(contents).map_err(fail)?;
    file.sync_all().map_err(fail)?;
    drop(file);
    fs::rename(&tmp, path).map_err(fail)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: String,
    pub tool_version: String,
    pub outputs: Vec<String>,
    pub wall_time: f64,
}

/// Collects output files of one command and writes `manifest.json` last.
pub struct Run {
    command: String,
    digest: String,
    out: PathBuf,
    outputs: Vec<String>,
    started: Instant,
}

impl Run {
    pub fn new(command: &str, config: &[u8], out: &Path) -> Self {
        Self {
            command: command.to_string(),
            digest: sha256_hex(config),
            out: out.to_path_buf(),
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> CliResult<PathBuf> {
        let path = self.out.join(name);
        write_atomic(&path, contents)?;
        self.outputs.push(path.display().to_string());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<PathBuf> {
        let mut text =
            serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn finish(self) -> CliResult<()> {
        let manifest = RunManifest {
            command: self.command,
            config_digest: self.digest,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: self.outputs,
            wall_time: self.started.elapsed().as_secs_f64(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        text.push('\n');
        write_atomic(&self.out.join("manifest.json"), text.as_bytes())
    }
}

/// Formats a float for CSV with 17 significant digits; non-finite values
/// become `NaN`.
pub fn csv_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "NaN".to_string()
    }
}

/// Quotes a CSV field when needed.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
