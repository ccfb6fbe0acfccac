//! Per-step provenance manifests: input hashes, output hashes, config
//! hash, and tool version. Byte-identical across reruns of the same
//! inputs, so manifest equality certifies pipeline determinism.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use syllabus_skills::hashing::sha256_file;

use crate::config::PipelineConfig;
use crate::errors::Result;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub config_sha256: String,
    pub seed: u64,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn build(
        subcommand: &str,
        cfg: &PipelineConfig,
        inputs: &[PathBuf],
        outputs: &[PathBuf],
    ) -> Result<Self> {
        Ok(Manifest {
            tool: "syllabus-skills".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: subcommand.into(),
            config_sha256: cfg.config_hash(),
            seed: cfg.seed,
            inputs: hash_all(inputs)?,
            outputs: hash_all(outputs)?,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.json", self.subcommand));
        let mut json = serde_json::to_string_pretty(self).expect("manifest serializes");
        json.push('\n');
        std::fs::write(&path, json)?;
        Ok(path)
    }
}

fn hash_all(paths: &[PathBuf]) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for path in paths {
        let digest = sha256_file(path)?;
        map.insert(path.display().to_string(), digest);
    }
    Ok(map)
}
