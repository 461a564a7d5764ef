//! Output bookkeeping: every file a run writes is recorded with its SHA-256
//! digest in `manifest.json`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::checks::Check;
use super::config::{ExperimentConfig, Subcommand};
use crate::error::Result;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Path relative to the output directory, `/`-separated.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub subcommand: Subcommand,
    pub config: ExperimentConfig,
    /// Wall-clock seconds; absent in serial mode so reruns compare equal.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub duration_seconds: Option<f64>,
    pub checks: Vec<Check>,
    pub all_passed: bool,
    pub files: Vec<OutputFile>,
}

impl RunManifest {
    /// Paths whose content no longer matches the recorded digest, or which
    /// are missing.
    pub fn verify(&self, dir: &Path) -> Vec<String> {
        self.files
            .iter()
            .filter(|f| match fs::read(dir.join(&f.path)) {
                Ok(bytes) => digest(&bytes) != f.sha256 || bytes.len() as u64 != f.bytes,
                Err(_) => true,
            })
            .map(|f| f.path.clone())
            .collect()
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes files under an output directory and records their digests.
#[derive(Debug)]
pub struct Outputs {
    root: PathBuf,
    prefix: String,
    files: Vec<OutputFile>,
}

impl Outputs {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Outputs {
            root,
            prefix: String::new(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Subdirectory prepended to later writes (empty for the root).
    pub fn set_prefix(&mut self, prefix: &str) {
        self.prefix = prefix.trim_matches('/').to_string();
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let rel = if self.prefix.is_empty() {
            name.to_string()
        } else {
            format!("{}/{name}", self.prefix)
        };
        let path = self.root.join(&rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.files.retain(|f| f.path != rel);
        self.files.push(OutputFile {
            path: rel,
            bytes: bytes.len() as u64,
            sha256: digest(bytes),
        });
        Ok(())
    }

    /// Render into a buffer with `f`, then write it.
    pub fn write_with(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut buf = serde_json::to_vec_pretty(value)?;
        buf.push(b'\n');
        self.write(name, &buf)
    }

    /// Recorded files sorted by path.
    pub fn files(&self) -> Vec<OutputFile> {
        let mut f = self.files.clone();
        f.sort_by(|a, b| a.path.cmp(&b.path));
        f
    }

    /// Write `manifest.json` (not itself listed).
    pub fn write_manifest(&self, manifest: &RunManifest) -> Result<()> {
        let mut f = fs::File::create(self.root.join(MANIFEST_FILE))?;
        serde_json::to_writer_pretty(&mut f, manifest)?;
        f.write_all(b"\n")?;
        Ok(())
    }
}
