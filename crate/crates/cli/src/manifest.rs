//! `manifest.json`: content digests of every input read and every output
//! written, so reruns can be compared byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const FILE_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Output path relative to the output directory, mapped to its digest.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    /// Hash of the config hash and the input digests.
    pub run_id: String,
    pub config_hash: String,
    pub tool_version: String,
    /// Input path as written in the config, mapped to its digest.
    pub inputs: BTreeMap<String, String>,
    pub stages: BTreeMap<String, StageRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Files under `dir`, relative and sorted, with `/` separators.
pub fn list_files(dir: &Path) -> Result<Vec<String>> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
        for entry in fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
            let p = entry.map_err(|e| CliError::io(dir, e))?.path();
            if p.is_dir() {
                walk(root, &p, out)?;
            } else {
                let rel = p.strip_prefix(root).expect("under root");
                out.push(rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"));
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out)?;
    out.sort();
    Ok(out)
}

/// Digest of a file, or of a directory's sorted `(path, digest)` listing.
pub fn path_digest(path: &Path) -> Result<String> {
    if !path.is_dir() {
        return file_digest(path);
    }
    let mut h = Sha256::new();
    for rel in list_files(path)? {
        h.update(rel.as_bytes());
        h.update(b"\0");
        h.update(file_digest(&path.join(&rel))?.as_bytes());
        h.update(b"\n");
    }
    Ok(hex::encode(h.finalize()))
}

impl Manifest {
    pub fn load_or_default(output_dir: &Path) -> Result<Self> {
        let path = output_dir.join(FILE_NAME);
        if !path.exists() {
            return Ok(Manifest::default());
        }
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
    }

    /// Records one stage and refreshes the run id. Earlier stages are kept.
    pub fn record(&mut self, config_hash: &str, inputs: &BTreeMap<String, String>, stage: &str, outputs: StageRecord) {
        self.config_hash = config_hash.to_string();
        self.tool_version = env!("CARGO_PKG_VERSION").to_string();
        self.inputs.extend(inputs.iter().map(|(k, v)| (k.clone(), v.clone())));
        self.stages.insert(stage.to_string(), outputs);
        let mut h = Sha256::new();
        h.update(self.config_hash.as_bytes());
        for (k, v) in &self.inputs {
            h.update(k.as_bytes());
            h.update(b"\0");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        self.run_id = hex::encode(&h.finalize()[..8]);
    }

    pub fn save(&self, output_dir: &Path) -> Result<()> {
        fs::create_dir_all(output_dir).map_err(|e| CliError::io(output_dir, e))?;
        let path = output_dir.join(FILE_NAME);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }
}
