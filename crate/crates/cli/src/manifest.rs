use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Run record written beside a stage's primary output.
pub struct Manifest {
    command: String,
    argv: Vec<String>,
    seed: Option<u64>,
    config: Option<String>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Manifest {
    pub fn new(command: &str, argv: &[String]) -> Self {
        Self {
            command: command.to_string(),
            argv: argv.to_vec(),
            seed: None,
            config: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// Effective configuration as a TOML document.
    pub fn config(mut self, toml: String) -> Self {
        self.config = Some(toml);
        self
    }

    pub fn input(mut self, path: &Path) -> Self {
        self.inputs.push(path.to_path_buf());
        self
    }

    pub fn output(mut self, path: &Path) -> Self {
        self.outputs.push(path.to_path_buf());
        self
    }

    pub fn to_json(&self) -> Result<Value> {
        let mut inputs = Map::new();
        for p in &self.inputs {
            inputs.insert(p.display().to_string(), Value::String(sha256_file(p)?));
        }
        let mut outputs = Map::new();
        for p in &self.outputs {
            if p.is_file() {
                outputs.insert(p.display().to_string(), Value::String(sha256_file(p)?));
            }
        }
        Ok(json!({
            "tool": "dtg",
            "versions": {
                "dtg": env!("CARGO_PKG_VERSION"),
                "checkpoint_format": dtg_core::grad::CHECKPOINT_VERSION,
                "world_format": dtg_core::world::WORLD_VERSION,
                "dataset_format": dtg_core::dataset::DATASET_VERSION,
            },
            "command": self.command,
            "argv": self.argv,
            "seed": self.seed,
            "config": self.config,
            "inputs": inputs,
            "outputs": outputs,
        }))
    }

    /// Writes `<primary>.manifest.json`.
    pub fn write_beside(&self, primary: &Path) -> Result<PathBuf> {
        let mut name = primary.as_os_str().to_owned();
        name.push(".manifest.json");
        let path = PathBuf::from(name);
        let text = serde_json::to_string_pretty(&self.to_json()?)?;
        std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
