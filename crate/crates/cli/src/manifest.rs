use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::Command;

/// Record of one run: enough to re-execute it and check the outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Command,
    /// SHA-256 of every input file, keyed by absolute path.
    pub inputs: BTreeMap<String, String>,
    /// Output file names relative to the manifest directory, with digests.
    pub outputs: BTreeMap<String, String>,
    pub tool_version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    /// Worker threads used; results do not depend on it.
    pub workers: usize,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> std::io::Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

/// Files produced by a command, written next to each other.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: impl Into<String>, contents: impl Into<Vec<u8>>) {
        self.files.push((name.into(), contents.into()));
    }

    /// Writes the files and a manifest named `<stem>.manifest.json` into `dir`.
    pub fn finish(self, dir: &Path, stem: &str, config: &Command, inputs: &[PathBuf]) -> std::io::Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let mut outputs = BTreeMap::new();
        for (name, bytes) in &self.files {
            fs::write(dir.join(name), bytes)?;
            outputs.insert(name.clone(), sha256_hex(bytes));
        }
        let mut digests = BTreeMap::new();
        for p in inputs {
            digests.insert(p.display().to_string(), file_digest(p)?);
        }
        let manifest = RunManifest {
            command: config.name().to_string(),
            config: config.clone(),
            inputs: digests,
            outputs,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            workers: rayon::current_num_threads(),
        };
        let path = dir.join(format!("{stem}.manifest.json"));
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}
