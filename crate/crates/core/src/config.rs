//! Run configuration file (TOML). Every section and key is optional; missing
//! values take the defaults printed by [`DtgConfig::defaults_toml`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::EvalConfig;
use crate::model::ModelConfig;
use crate::navsim::SimConfig;
use crate::training::TrainConfig;
use crate::world::WorldSpec;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DtgConfig {
    /// Global seed; stages derive their streams from it.
    pub seed: u64,
    pub world: WorldSpec,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub sim: SimConfig,
}

impl DtgConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn defaults_toml() -> String {
        Self::default().to_toml_string().expect("defaults serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::training::Threshold;

    #[test]
    fn defaults_round_trip() {
        let text = DtgConfig::defaults_toml();
        assert_eq!(DtgConfig::from_toml_str(&text).unwrap(), DtgConfig::default());
        assert!(text.contains("beta = 0.1"));
        assert!(text.contains("h_d = \"auto\""));
    }

    #[test]
    fn partial_files_fill_in_defaults() {
        let c = DtgConfig::from_toml_str("seed = 42\n[train]\nbeta = 0.0\nh_d = 0.25\n").unwrap();
        assert_eq!(c.seed, 42);
        assert_eq!(c.train.beta, 0.0);
        assert_eq!(c.train.h_d, Threshold::Fixed(0.25));
        assert_eq!(c.model, ModelConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(DtgConfig::from_toml_str("sede = 1\n").is_err());
        assert!(DtgConfig::from_toml_str("[train]\nbeta = \"high\"\n").is_err());
    }
}
