//! Report files, the run manifest and the error report.
//!
//! The manifest hashes the effective configuration in its sorted-key compact JSON form.

use crate::config::ExperimentConfig;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::path::Path;

/// Errors that end a run; each maps to an exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub fn to_json(&self) -> String {
        let (kind, msg) = match self {
            CliError::Config(m) => ("config", m),
            CliError::Io(m) => ("io", m),
        };
        json!({ "error": kind, "exit_code": self.code(), "message": msg }).to_string()
    }
}

impl From<lorentz_kinetic::error::Error> for CliError {
    fn from(e: lorentz_kinetic::error::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

/// Tabular output with a header row.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

/// Everything one command produces.
pub struct RunOutput {
    pub command: &'static str,
    /// Tag of the estimate or construction the report checks.
    pub anchor: String,
    pub report: Value,
    pub table: Table,
    pub svg: Option<String>,
    pub summary: String,
}

/// Full-precision float formatting for CSV cells.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn write(path: &Path, bytes: &[u8]) -> Result<String, CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(sha256_hex(bytes))
}

#[derive(Serialize)]
struct FileEntry {
    name: String,
    sha256: String,
}

/// Writes `<command>.json`, `<command>.csv`, the optional `<command>.svg` and `manifest.json`.
pub fn write_all(cfg: &ExperimentConfig, out: &RunOutput) -> Result<(), CliError> {
    let dir = Path::new(&cfg.output.dir);
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut files = Vec::new();

    let report = json!({ "command": out.command, "anchor": out.anchor, "seed": cfg.seed, "result": out.report });
    let text =
        serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))? + "\n";
    let name = format!("{}.json", out.command);
    files.push(FileEntry {
        sha256: write(&dir.join(&name), text.as_bytes())?,
        name,
    });

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&out.table.header)
        .map_err(|e| CliError::Io(e.to_string()))?;
    for row in &out.table.rows {
        w.write_record(row)
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    let name = format!("{}.csv", out.command);
    files.push(FileEntry {
        sha256: write(&dir.join(&name), &bytes)?,
        name,
    });

    if let Some(svg) = &out.svg {
        let name = format!("{}.svg", out.command);
        files.push(FileEntry {
            sha256: write(&dir.join(&name), svg.as_bytes())?,
            name,
        });
    }

    let config = serde_json::to_value(cfg).map_err(|e| CliError::Io(e.to_string()))?;
    let canonical = config.to_string();
    let manifest = json!({
        "command": out.command,
        "anchor": out.anchor,
        "config_sha256": sha256_hex(canonical.as_bytes()),
        "config": config,
        "seed": cfg.seed,
        "versions": {
            "lorentz-cli": env!("CARGO_PKG_VERSION"),
            "lorentz-kinetic": lorentz_kinetic::VERSION,
        },
        "parallel": lorentz_kinetic::par::is_parallel(),
        "files": files,
    });
    let text =
        serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))? + "\n";
    write(&dir.join("manifest.json"), text.as_bytes())?;
    Ok(())
}
