//! Run artifacts: `<out>/<command>.csv`, `.summary.json`, `.manifest.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub config_hash: String,
    pub master_seed: u64,
    pub tool_version: String,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<String>,
}

/// A finished experiment, ready to be written.
pub struct Artifacts {
    pub csv: Vec<u8>,
    pub summary: serde_json::Value,
}

pub fn csv_bytes<R: Serialize>(rows: impl IntoIterator<Item = R>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn persist(cfg: &Config, started: String, art: &Artifacts) -> Result<PathBuf, CliError> {
    let out = PathBuf::from(cfg.raw("out")?);
    fs::create_dir_all(&out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let csv = out.join(format!("{}.csv", cfg.command));
    let summary = out.join(format!("{}.summary.json", cfg.command));
    let manifest = out.join(format!("{}.manifest.json", cfg.command));
    write(&csv, &art.csv)?;
    let mut text = serde_json::to_string_pretty(&art.summary)?;
    text.push('\n');
    write(&summary, text.as_bytes())?;
    let m = RunManifest {
        command: cfg.command.clone(),
        config: cfg.values.clone(),
        config_hash: cfg.hash(),
        master_seed: cfg.get("seed")?,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        started,
        finished: now(),
        outputs: [&csv, &summary].iter().map(|p| p.display().to_string()).collect(),
    };
    let mut text = serde_json::to_string_pretty(&m)?;
    text.push('\n');
    write(&manifest, text.as_bytes())?;
    Ok(manifest)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339()
}
