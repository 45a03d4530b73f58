//! Offline evaluation of a generator (or a baseline) on held-out scenarios.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::diffusion::{sample_batch_independent, SamplerMode};
use crate::error::{Error, Result};
use crate::metrics::{evaluate_trajectory, EvalRecord, GoalDistances};
use crate::model::DtgModel;
use crate::perception::encode_batch;
use crate::trajectory::{Trajectory, TrajectorySpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub seed: u64,
    pub sampler: SamplerMode,
    /// Scenarios sampled together.
    pub batch_size: usize,
    /// Record wall-clock inference time per scenario (makes output
    /// machine-dependent).
    pub timing: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            sampler: SamplerMode::Chained,
            batch_size: 64,
            timing: false,
        }
    }
}

/// Sample one trajectory per record and score it. Scenario `i` draws its noise
/// from a stream derived from `(cfg.seed, i)`, so results do not depend on
/// batch size.
pub fn evaluate_model(model: &DtgModel, data: &Dataset, cfg: &EvalConfig) -> Result<Vec<EvalRecord>> {
    if data.observation != model.config().observation || data.trajectory != model.config().trajectory {
        return Err(Error::Config("scenario layout differs from the model".into()));
    }
    if cfg.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    let mut out = Vec::with_capacity(data.records.len());
    let ids: Vec<usize> = (0..data.records.len()).collect();
    for chunk in ids.chunks(cfg.batch_size) {
        let t0 = Instant::now();
        let obs: Vec<_> = chunk.iter().map(|&i| &data.records[i].observation).collect();
        let conds = encode_batch(model, &obs)?;
        let mut rngs: Vec<ChaCha8Rng> = chunk
            .iter()
            .map(|&i| ChaCha8Rng::seed_from_u64(crate::derive_seed(cfg.seed, i as u64)))
            .collect();
        let trajs = sample_batch_independent(model, &conds, &mut rngs, cfg.sampler)?;
        let per = t0.elapsed().as_secs_f64() / chunk.len() as f64;
        for (&i, traj) in chunk.iter().zip(&trajs) {
            let mut rec = score(data, i, traj)?;
            rec.inference_time = cfg.timing.then_some(per);
            out.push(rec);
        }
    }
    Ok(out)
}

fn score(data: &Dataset, i: usize, traj: &Trajectory) -> Result<EvalRecord> {
    let r = &data.records[i];
    let world = data.world_of(r);
    let goal = GoalDistances::new(world, r.goal)?;
    Ok(evaluate_trajectory(i, world, &goal, traj, &r.start))
}

/// Evenly spaced waypoints straight at the goal, `spec.length_m` long or up
/// to the goal if it is closer.
pub fn straight_line_trajectory(goal_robot: [f64; 2], spec: &TrajectorySpec) -> Result<Trajectory> {
    let d = goal_robot[0].hypot(goal_robot[1]);
    if !(d > 0.0) {
        return Err(Error::InvalidInput("goal coincides with the robot".into()));
    }
    let len = d.min(spec.length_m);
    let step = len / spec.waypoints as f64;
    let u = [goal_robot[0] / d * step, goal_robot[1] / d * step];
    Trajectory::from_increments(vec![u; spec.waypoints])
}

/// Scores of the straight-line baseline on every record.
pub fn evaluate_straight_line(data: &Dataset) -> Result<Vec<EvalRecord>> {
    (0..data.records.len())
        .map(|i| {
            let traj = straight_line_trajectory(data.records[i].observation.goal, &data.trajectory)?;
            score(data, i, &traj)
        })
        .collect()
}
