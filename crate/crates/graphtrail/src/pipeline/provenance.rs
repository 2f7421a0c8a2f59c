//! Provenance sidecars: enough recorded state to regenerate any artifact
//! bit-exactly (resolved config, input hashes, seed, threads, tool version).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn hash_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub stage: String,
    pub seed: u64,
    pub threads: usize,
    /// SHA-256 of the serialized resolved config below.
    pub config_sha256: String,
    /// The fully resolved pipeline config (absolute paths, concrete seeds).
    pub resolved_config: serde_json::Value,
    /// input path -> SHA-256 of its bytes
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl Provenance {
    pub fn new(
        stage: &str,
        seed: u64,
        threads: usize,
        resolved_config: serde_json::Value,
    ) -> Provenance {
        let config_text =
            serde_json::to_string(&resolved_config).expect("config value serializes");
        Provenance {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            stage: stage.to_string(),
            seed,
            threads,
            config_sha256: sha256_hex(config_text.as_bytes()),
            resolved_config,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn record_input(&mut self, path: &Path) -> Result<()> {
        self.inputs
            .insert(path.display().to_string(), hash_file(path)?);
        Ok(())
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Writes `<artifact>.provenance.json` next to the artifact.
    pub fn write_for(&self, artifact: &Path) -> Result<()> {
        let mut name = artifact.file_name().unwrap_or_default().to_os_string();
        name.push(".provenance.json");
        let path = artifact.with_file_name(name);
        let text =
            serde_json::to_string_pretty(self).expect("provenance serialization cannot fail");
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

pub fn read_provenance(path: &Path) -> Result<Provenance> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn sidecar_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let artifact = dir.path().join("thing.json");
        std::fs::write(&artifact, "{}").unwrap();
        let mut p = Provenance::new("test", 42, 1, serde_json::json!({"seed": 42}));
        p.record_input(&artifact).unwrap();
        p.record_output(&artifact);
        p.write_for(&artifact).unwrap();
        let back = read_provenance(&dir.path().join("thing.json.provenance.json")).unwrap();
        assert_eq!(back.stage, "test");
        assert_eq!(back.seed, 42);
        assert_eq!(back.inputs.len(), 1);
    }
}
