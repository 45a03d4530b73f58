//! WebAssembly bindings for the static demo page in `www/`.

use dtg_core::diffusion::{noise_trajectory, DiffusionSchedule, ScheduleKind};
use dtg_core::eval::straight_line_trajectory;
use dtg_core::metrics::{evaluate_trajectory, GoalDistances};
use dtg_core::oracle::ground_truth_trajectory;
use dtg_core::trajectory::{Trajectory, TrajectorySpec};
use dtg_core::world::{generate_world, GridWorld, Pose, WorldSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct World {
    inner: GridWorld,
}

#[wasm_bindgen]
impl World {
    /// `preset` is "open", "corridor" or "campus".
    pub fn generate(seed: u64, preset: &str, size_m: f64, resolution: f64) -> Result<World, JsError> {
        let spec = WorldSpec {
            size_m,
            resolution,
            feature_mix: preset.parse().map_err(js_err)?,
            ..Default::default()
        };
        Ok(World {
            inner: generate_world(seed, &spec).map_err(js_err)?,
        })
    }

    pub fn width(&self) -> usize {
        self.inner.width()
    }

    pub fn height(&self) -> usize {
        self.inner.height()
    }

    pub fn resolution(&self) -> f64 {
        self.inner.resolution()
    }

    /// Row-major, row 0 at y = 0; 1 = traversable.
    pub fn traversable(&self) -> Vec<u8> {
        self.inner.traversable().iter().map(|&t| t as u8).collect()
    }

    /// Row-major clearance in meters, clipped to 1.
    pub fn clearance(&self) -> Vec<f64> {
        self.inner.clearance().to_vec()
    }

    /// Ground-truth trajectory and the straight-line baseline from a start
    /// pose toward a goal, with their scores. Returns a JSON string.
    pub fn plan(&self, sx: f64, sy: f64, heading: f64, gx: f64, gy: f64) -> Result<String, JsError> {
        let start = Pose::new(sx, sy, heading);
        let goal = [gx, gy];
        let spec = TrajectorySpec::default();
        let gt = ground_truth_trajectory(&self.inner, &start, goal, &spec).map_err(js_err)?;
        let line = straight_line_trajectory(start.to_robot(goal), &spec).map_err(js_err)?;
        let dist = GoalDistances::new(&self.inner, goal).map_err(js_err)?;
        let describe = |t: &Trajectory| {
            let r = evaluate_trajectory(0, &self.inner, &dist, t, &start);
            json!({
                "waypoints": t.world_waypoints(&start),
                "binary": r.binary_traversable,
                "clearance": r.clearance_score,
                "ratio_signed": r.ratio.map(|d| d.signed),
                "ratio_literal": r.ratio.map(|d| d.literal),
            })
        };
        Ok(json!({
            "travel_distance": dist.at(start.xy()),
            "ground_truth": describe(&gt),
            "straight_line": describe(&line),
        })
        .to_string())
    }

    /// The ground-truth trajectory after `t` forward noising steps, in world
    /// coordinates, as flat `[x0, y0, x1, y1, ...]`.
    #[allow(clippy::too_many_arguments)]
    pub fn noised(
        &self,
        sx: f64,
        sy: f64,
        heading: f64,
        gx: f64,
        gy: f64,
        steps: usize,
        t: usize,
        seed: u64,
    ) -> Result<Vec<f64>, JsError> {
        let start = Pose::new(sx, sy, heading);
        let gt = ground_truth_trajectory(&self.inner, &start, [gx, gy], &TrajectorySpec::default()).map_err(js_err)?;
        let sched = DiffusionSchedule::new(steps, ScheduleKind::Cosine).map_err(js_err)?;
        let x0 = gt.flat();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eps: Vec<f64> = (0..x0.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let xt = if t == 0 {
            x0
        } else {
            noise_trajectory(&x0, t, &eps, &sched).map_err(js_err)?
        };
        let traj = Trajectory::from_flat(&xt).map_err(js_err)?;
        Ok(traj.world_waypoints(&start).into_iter().flatten().collect())
    }
}

/// `alpha_bar(t)` for t = 0..=steps.
#[wasm_bindgen]
pub fn schedule_alpha_bar(steps: usize, kind: &str) -> Result<Vec<f64>, JsError> {
    let kind: ScheduleKind = kind.parse().map_err(js_err)?;
    let s = DiffusionSchedule::new(steps, kind).map_err(js_err)?;
    Ok((0..=steps).map(|t| s.alpha_bar(t)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_reports_both_trajectories() {
        let w = World::generate(3, "open", 80.0, 0.5).unwrap();
        let v: serde_json::Value = serde_json::from_str(&w.plan(10.0, 10.0, 0.0, 60.0, 40.0).unwrap()).unwrap();
        assert_eq!(v["ground_truth"]["waypoints"].as_array().unwrap().len(), 16);
        assert_eq!(v["straight_line"]["binary"], true);
        let n = w.noised(10.0, 10.0, 0.0, 60.0, 40.0, 32, 0, 1).unwrap();
        assert_eq!(n.len(), 32);
        let curve = schedule_alpha_bar(8, "cosine").unwrap();
        assert_eq!(curve[0], 1.0);
        assert!(curve.windows(2).all(|p| p[1] < p[0]));
    }
}
