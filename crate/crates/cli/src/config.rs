//! Flat key/value run configuration.
//!
//! Resolution order, highest first: command-line flags, the `--config` file,
//! `SVTAIL_SEED` (seed only), built-in defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Keys that do not change numerical output and stay out of the hash.
pub const UNHASHED: [&str; 2] = ["out", "jobs"];

pub const SEED_ENV: &str = "SVTAIL_SEED";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Config {
    pub command: String,
    pub values: BTreeMap<String, String>,
}

impl Config {
    pub fn raw(&self, key: &str) -> Result<&str, CliError> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| CliError::Config(format!("missing value for `{key}`")))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        let v = self.raw(key)?;
        v.trim()
            .parse()
            .map_err(|e| CliError::Config(format!("`{key}` = `{v}`: {e}")))
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, CliError>
    where
        T::Err: Display,
    {
        let v = self.raw(key)?;
        v.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|e| CliError::Config(format!("`{key}` item `{}`: {e}", s.trim())))
            })
            .collect()
    }

    /// `jobs = 0` means no cap.
    pub fn jobs(&self) -> Result<Option<usize>, CliError> {
        match self.values.get("jobs") {
            None => Ok(None),
            Some(_) => Ok(Some(self.get::<usize>("jobs")?).filter(|&j| j > 0)),
        }
    }

    /// SHA-256 over `command\n` followed by sorted `key=value\n` lines.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.command.as_bytes());
        h.update(b"\n");
        for (k, v) in &self.values {
            if UNHASHED.contains(&k.as_str()) {
                continue;
            }
            h.update(format!("{k}={v}\n").as_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("config line {}: expected key = value", no + 1)))?;
        let (k, v) = (k.trim().trim_start_matches("--"), v.trim());
        if k.is_empty() {
            return Err(CliError::Config(format!("config line {}: empty key", no + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(CliError::Config(format!("config line {}: `{k}` given twice", no + 1)));
        }
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_config_text(&text)
}

/// Layers the sources over `defaults`. Keys outside `defaults` are rejected.
pub fn resolve(
    command: &str,
    defaults: &[(&str, &str)],
    file: Option<BTreeMap<String, String>>,
    env_seed: Option<String>,
    flags: BTreeMap<String, String>,
) -> Result<Config, CliError> {
    let mut values: BTreeMap<String, String> = defaults.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    let known = |k: &str| defaults.iter().any(|(d, _)| *d == k);
    let file = file.unwrap_or_default();
    for k in file.keys().chain(flags.keys()) {
        if !known(k) {
            return Err(CliError::Config(format!("unknown key `{k}` for `{command}`")));
        }
    }
    if let Some(s) = env_seed.filter(|_| !file.contains_key("seed")) {
        values.insert("seed".into(), s);
    }
    values.extend(file);
    values.extend(flags);
    // Absent optional keys stay out of the echoed configuration.
    values.retain(|_, v| !v.is_empty());
    Ok(Config {
        command: command.to_string(),
        values,
    })
}
