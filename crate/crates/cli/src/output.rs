//! Artifact writers and the run manifest.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

fn io(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Floats are written in Rust's shortest round-trip form.
pub fn write_csv<const N: usize>(path: &Path, header: &[&str; N], rows: &[[f64; N]]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io(path, e))?;
    w.write_record(header).map_err(|e| io(path, e))?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(|e| io(path, e))?;
    }
    w.flush().map_err(|e| io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io(path, e))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub name: String,
    pub sha256: String,
}

/// No timestamps or paths, so identical runs give identical manifests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub config: RunConfig,
    pub files: Vec<FileDigest>,
}

impl Manifest {
    pub fn new(cfg: &RunConfig) -> Manifest {
        let mut config = cfg.clone();
        config.output_dir = Default::default();
        Manifest {
            tool: "conewave".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_sha256: sha256_hex(cfg.canonical_json().as_bytes()),
            seed: cfg.seed,
            config,
            files: Vec::new(),
        }
    }

    pub fn write(mut self, dir: &Path, names: &[&str]) -> Result<(), CliError> {
        for name in names {
            let path = dir.join(name);
            let bytes = fs::read(&path).map_err(|e| io(&path, e))?;
            self.files.push(FileDigest { name: name.to_string(), sha256: sha256_hex(&bytes) });
        }
        write_json(&dir.join("manifest.json"), &self)
    }
}
