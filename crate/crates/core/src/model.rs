//! The full generator: encoder, denoiser and noise schedule, with its
//! checkpoint mapping.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diffusion::{Crnn, CrnnConfig, DiffusionSchedule, SamplerMode, ScheduleKind};
use crate::error::{Error, Result};
use crate::grad::{Checkpoint, ParamSet};
use crate::perception::{EncoderConfig, PerceptionEncoder};
use crate::trajectory::TrajectorySpec;
use crate::world::ObservationSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiffusionConfig {
    pub steps: usize,
    pub schedule: ScheduleKind,
    pub sampler: SamplerMode,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        Self {
            steps: 32,
            schedule: ScheduleKind::Cosine,
            sampler: SamplerMode::Chained,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub observation: ObservationSpec,
    pub trajectory: TrajectorySpec,
    pub encoder: EncoderConfig,
    pub crnn: CrnnConfig,
    pub diffusion: DiffusionConfig,
}

#[derive(Clone, Debug)]
pub struct DtgModel {
    config: ModelConfig,
    params: ParamSet,
    encoder: PerceptionEncoder,
    crnn: Crnn,
    schedule: DiffusionSchedule,
}

impl DtgModel {
    /// Freshly initialized weights drawn from `seed`.
    pub fn new(config: &ModelConfig, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        let encoder = PerceptionEncoder::new(&mut params, config.observation, &config.encoder, &mut rng)?;
        let crnn = Crnn::new(
            &mut params,
            &config.crnn,
            encoder.condition_dim(),
            config.trajectory.waypoints,
            &mut rng,
        )?;
        let schedule = DiffusionSchedule::new(config.diffusion.steps, config.diffusion.schedule)?;
        Ok(Self {
            config: config.clone(),
            params,
            encoder,
            crnn,
            schedule,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn encoder(&self) -> &PerceptionEncoder {
        &self.encoder
    }

    pub fn crnn(&self) -> &Crnn {
        &self.crnn
    }

    pub fn schedule(&self) -> &DiffusionSchedule {
        &self.schedule
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::default();
        let d = &self.config.diffusion;
        ck.header.insert("format".into(), "dtg-model".into());
        ck.header.insert("diffusion.steps".into(), d.steps.to_string());
        ck.header.insert("diffusion.schedule".into(), d.schedule.to_string());
        ck.header.insert(
            "model".into(),
            serde_json::to_string(&self.config).expect("config serializes"),
        );
        ck.tensors = self.params.iter().map(|(n, t)| (n.to_string(), t.clone())).collect();
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let bad = |detail: String| Error::Format {
            kind: "checkpoint",
            detail,
        };
        let json = ck
            .header
            .get("model")
            .ok_or_else(|| bad("missing model config".into()))?;
        let config: ModelConfig = serde_json::from_str(json).map_err(|e| bad(format!("model config: {e}")))?;
        let mut model = Self::new(&config, 0)?;
        if ck.tensors.len() != model.params.len() {
            return Err(bad(format!(
                "{} tensors, model expects {}",
                ck.tensors.len(),
                model.params.len()
            )));
        }
        let mut stored = ParamSet::new();
        for (n, t) in &ck.tensors {
            stored.push(n.clone(), t.clone());
        }
        model.params.load_from(&stored)?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_checkpoint().to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::from_bytes(&std::fs::read(path)?)?)
    }
}
