use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Everything that determines a run's outputs, plus where they went.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: String,
    pub config_sha256: String,
    pub seed: u64,
    pub overrides: BTreeMap<String, String>,
    pub out_dir: String,
    pub version: String,
}

#[derive(Serialize)]
struct Hashed<'a> {
    command: &'a str,
    config_sha256: &'a str,
    seed: u64,
    overrides: &'a BTreeMap<String, String>,
    version: &'a str,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunManifest {
    pub fn new(
        command: &str,
        config: &Path,
        config_bytes: &[u8],
        seed: u64,
        out_dir: &Path,
    ) -> Self {
        Self {
            command: command.to_string(),
            config_path: config.display().to_string(),
            config_sha256: sha256_hex(config_bytes),
            seed,
            overrides: BTreeMap::new(),
            out_dir: out_dir.display().to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.overrides.insert(key.to_string(), value.to_string());
    }

    /// Hash over the fields that affect outputs; paths are left out so a
    /// rerun elsewhere yields the same hash.
    pub fn hash(&self) -> String {
        let doc = toml::to_string(&Hashed {
            command: &self.command,
            config_sha256: &self.config_sha256,
            seed: self.seed,
            overrides: &self.overrides,
            version: &self.version,
        })
        .expect("manifest serializes");
        sha256_hex(doc.as_bytes())
    }

    pub fn to_toml(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            manifest_sha256: String,
            #[serde(flatten)]
            manifest: &'a RunManifest,
        }
        toml::to_string(&Doc {
            manifest_sha256: self.hash(),
            manifest: self,
        })
        .expect("manifest serializes")
    }
}
