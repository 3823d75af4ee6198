//! `manifest.json`: configuration hash, versions and a content hash for every
//! artifact. Wall times go to `timing.json` so the manifest stays
//! reproducible.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";
pub const TIMING: &str = "timing.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub command: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_sha256: String,
    pub versions: BTreeMap<String, String>,
    pub artifacts: BTreeMap<String, ArtifactEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<(String, u64)> {
    let bytes = fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok((sha256_hex(&bytes), bytes.len() as u64))
}

fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("wnc-cli".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("wnc-core".to_string(), wnc_core::VERSION.to_string()),
    ])
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

impl Manifest {
    pub fn new(config_sha256: &str) -> Self {
        Self {
            config_sha256: config_sha256.to_string(),
            versions: versions(),
            artifacts: BTreeMap::new(),
        }
    }

    pub fn path(dir: &Path) -> PathBuf {
        dir.join(MANIFEST)
    }

    pub fn read(dir: &Path) -> Result<Option<Self>> {
        let path = Self::path(dir);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        Ok(Some(
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
        ))
    }

    /// The manifest of `dir` when it belongs to this configuration; a fresh
    /// one when `fresh` is set, an error otherwise.
    pub fn open(dir: &Path, config_sha256: &str, fresh: bool) -> Result<Self> {
        match Self::read(dir)? {
            Some(m) if m.config_sha256 == config_sha256 => Ok(m),
            Some(_) if !fresh => bail!(
                "artifacts in {} were produced by a different configuration; rerun 'simulate' first",
                dir.display()
            ),
            _ => Ok(Self::new(config_sha256)),
        }
    }

    pub fn record(&mut self, dir: &Path, name: &str, command: &str) -> Result<()> {
        let (sha256, bytes) = file_sha256(&dir.join(name))?;
        self.artifacts.insert(
            name.to_string(),
            ArtifactEntry {
                command: command.to_string(),
                sha256,
                bytes,
            },
        );
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&Self::path(dir), self)
    }
}

/// Adds `seconds` for `command` to `timing.json`.
pub fn record_timing(dir: &Path, command: &str, seconds: f64) -> Result<()> {
    let path = dir.join(TIMING);
    let mut table: BTreeMap<String, f64> = if path.exists() {
        serde_json::from_str(&fs::read_to_string(&path)?).unwrap_or_default()
    } else {
        BTreeMap::new()
    };
    table.insert(command.to_string(), seconds);
    write_json(&path, &table)
}
