//! Scenario records (observation plus ground-truth trajectory) and their
//! self-contained container file.
//!
//! ```text
//! "DTGD" | version u32
//! observation spec: rays u32, max_range f64, scan_frames u32, velocity_frames u32,
//!                   scan_period f64, velocity_period f64
//! trajectory spec:  length f64, waypoints u32
//! world_count u32, then each world as an embedded world file
//! record_count u32, then per record:
//!   world u32, start (x, y, heading) f64, goal (x, y) f64, travel_distance f64,
//!   scans f64 * (scan_frames * rays), velocities f64 * (2 * velocity_frames),
//!   observed goal f64 * 2, increments f64 * (2 * waypoints)
//! ```
//!
//! All numbers little-endian.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::oracle::ground_truth_trajectory;
use crate::trajectory::{Trajectory, TrajectorySpec};
use crate::world::{
    read_world, sample_scenario, synthesize_history, write_world, GridWorld, Observation, ObservationSpec, Pose,
    ScenarioMode,
};

pub const DATASET_MAGIC: &[u8; 4] = b"DTGD";
pub const DATASET_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioRecord {
    /// Index into [`Dataset::worlds`].
    pub world: usize,
    pub start: Pose,
    pub goal: [f64; 2],
    pub travel_distance: f64,
    pub observation: Observation,
    pub ground_truth: Trajectory,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub observation: ObservationSpec,
    pub trajectory: TrajectorySpec,
    pub worlds: Vec<GridWorld>,
    pub records: Vec<ScenarioRecord>,
}

/// One scenario with a synthetic motion history: the robot is assumed to have
/// been driving at `v ~ U[0, 1]` m/s and `omega ~ U[-1, 1]` rad/s.
pub fn build_record(
    world: &GridWorld,
    world_id: usize,
    rng: &mut impl Rng,
    mode: ScenarioMode,
    obs: &ObservationSpec,
    traj: &TrajectorySpec,
) -> Result<ScenarioRecord> {
    let sc = sample_scenario(world, rng, mode)?;
    let v = rng.random_range(0.0..1.0);
    let omega = rng.random_range(-1.0..1.0);
    let (poses, velocities) = synthesize_history(world, sc.start, v, omega, obs);
    let observation = Observation::capture(world, &poses, velocities, sc.goal, obs)?;
    let ground_truth = ground_truth_trajectory(world, &sc.start, sc.goal, traj)?;
    Ok(ScenarioRecord {
        world: world_id,
        start: sc.start,
        goal: sc.goal,
        travel_distance: sc.travel_distance,
        observation,
        ground_truth,
    })
}

impl Dataset {
    /// `per_world` records from every world. World `i` draws from its own
    /// stream derived from `seed`, so adding worlds never changes earlier records.
    pub fn build(
        worlds: Vec<GridWorld>,
        per_world: usize,
        mode: ScenarioMode,
        seed: u64,
        observation: ObservationSpec,
        trajectory: TrajectorySpec,
    ) -> Result<Self> {
        let mut records = Vec::with_capacity(worlds.len() * per_world);
        for (i, w) in worlds.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(crate::derive_seed(seed, i as u64));
            for _ in 0..per_world {
                records.push(build_record(w, i, &mut rng, mode, &observation, &trajectory)?);
            }
        }
        Ok(Self {
            observation,
            trajectory,
            worlds,
            records,
        })
    }

    pub fn world_of(&self, r: &ScenarioRecord) -> &GridWorld {
        &self.worlds[r.world]
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let o = &self.observation;
        w.write_all(DATASET_MAGIC)?;
        put_u32(w, DATASET_VERSION)?;
        put_u32(w, o.rays as u32)?;
        put_f64(w, o.max_range_m)?;
        put_u32(w, o.scan_frames as u32)?;
        put_u32(w, o.velocity_frames as u32)?;
        put_f64(w, o.scan_period_s)?;
        put_f64(w, o.velocity_period_s)?;
        put_f64(w, self.trajectory.length_m)?;
        put_u32(w, self.trajectory.waypoints as u32)?;
        put_u32(w, self.worlds.len() as u32)?;
        for world in &self.worlds {
            write_world(world, w)?;
        }
        put_u32(w, self.records.len() as u32)?;
        for r in &self.records {
            put_u32(w, r.world as u32)?;
            for v in [
                r.start.x,
                r.start.y,
                r.start.heading,
                r.goal[0],
                r.goal[1],
                r.travel_distance,
            ] {
                put_f64(w, v)?;
            }
            for &v in r
                .observation
                .scans
                .iter()
                .chain(r.observation.velocities.iter().flatten())
            {
                put_f64(w, v)?;
            }
            put_f64(w, r.observation.goal[0])?;
            put_f64(w, r.observation.goal[1])?;
            for v in r.ground_truth.flat() {
                put_f64(w, v)?;
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|e| bad(format!("truncated: {e}")))?;
        if &magic != DATASET_MAGIC {
            return Err(Error::BadMagic {
                kind: "dataset",
                found: magic,
            });
        }
        let version = get_u32(r)?;
        if version != DATASET_VERSION {
            return Err(Error::Version {
                kind: "dataset",
                expected: DATASET_VERSION,
                found: version,
            });
        }
        let observation = ObservationSpec {
            rays: get_u32(r)? as usize,
            max_range_m: get_f64(r)?,
            scan_frames: get_u32(r)? as usize,
            velocity_frames: get_u32(r)? as usize,
            scan_period_s: get_f64(r)?,
            velocity_period_s: get_f64(r)?,
        };
        let trajectory = TrajectorySpec {
            length_m: get_f64(r)?,
            waypoints: get_u32(r)? as usize,
        };
        let n_worlds = get_u32(r)? as usize;
        let mut worlds = Vec::with_capacity(n_worlds.min(1024));
        for _ in 0..n_worlds {
            worlds.push(read_world(r)?);
        }
        let n = get_u32(r)? as usize;
        let mut records = Vec::with_capacity(n.min(1 << 16));
        for _ in 0..n {
            let world = get_u32(r)? as usize;
            if world >= worlds.len() {
                return Err(bad(format!("record refers to world {world} of {}", worlds.len())));
            }
            let f = get_vec(r, 6)?;
            let scans = get_vec(r, observation.scan_frames * observation.rays)?;
            let velocities = get_vec(r, 2 * observation.velocity_frames)?
                .chunks_exact(2)
                .map(|c| [c[0], c[1]])
                .collect();
            let goal = get_vec(r, 2)?;
            let inc = get_vec(r, 2 * trajectory.waypoints)?;
            records.push(ScenarioRecord {
                world,
                start: Pose {
                    x: f[0],
                    y: f[1],
                    heading: f[2],
                },
                goal: [f[3], f[4]],
                travel_distance: f[5],
                observation: Observation {
                    scans,
                    velocities,
                    goal: [goal[0], goal[1]],
                },
                ground_truth: Trajectory::from_flat(&inc)?,
            });
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(bad("trailing bytes"));
        }
        Ok(Self {
            observation,
            trajectory,
            worlds,
            records,
        })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::read_from(&mut bytes.as_slice())
    }
}

fn bad(detail: impl Into<String>) -> Error {
    Error::Format {
        kind: "dataset",
        detail: detail.into(),
    }
}

fn put_u32(w: &mut impl Write, v: u32) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn put_f64(w: &mut impl Write, v: f64) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn get_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|e| bad(format!("truncated: {e}")))?;
    Ok(u32::from_le_bytes(b))
}

fn get_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|e| bad(format!("truncated: {e}")))?;
    Ok(f64::from_le_bytes(b))
}

fn get_vec(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    (0..n).map(|_| get_f64(r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{generate_world, FeatureMix, WorldSpec};

    fn small() -> Dataset {
        let spec = WorldSpec {
            size_m: 80.0,
            resolution: 0.5,
            feature_mix: FeatureMix::Corridor,
            min_corridor_width_m: 3.0,
        };
        let worlds = vec![generate_world(1, &spec).unwrap(), generate_world(2, &spec).unwrap()];
        let obs = ObservationSpec {
            rays: 16,
            ..Default::default()
        };
        Dataset::build(worlds, 3, ScenarioMode::Train, 7, obs, TrajectorySpec::default()).unwrap()
    }

    #[test]
    fn records_are_consistent() {
        let d = small();
        assert_eq!(d.records.len(), 6);
        for r in &d.records {
            let w = d.world_of(r);
            assert!(w.is_free_at(r.start.xy()) && w.is_free_at(r.goal));
            assert_eq!(r.ground_truth.len(), 16);
            // Chords of a 15 m path resampled every 0.9375 m.
            for inc in r.ground_truth.increments() {
                let d = inc[0].hypot(inc[1]);
                assert!(d <= 0.9375 + 1e-9 && d > 0.5, "{d}");
            }
            r.observation.validate(&d.observation).unwrap();
        }
    }

    #[test]
    fn file_round_trip_is_byte_exact() {
        let d = small();
        let mut buf = Vec::new();
        d.write_to(&mut buf).unwrap();
        let back = Dataset::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back, d);
        let mut again = Vec::new();
        back.write_to(&mut again).unwrap();
        assert_eq!(again, buf);
        buf.push(0);
        assert!(Dataset::read_from(&mut buf.as_slice()).is_err());
        buf[0] = b'Q';
        assert!(matches!(
            Dataset::read_from(&mut buf.as_slice()),
            Err(Error::BadMagic { .. })
        ));
    }

    #[test]
    fn build_is_deterministic() {
        assert_eq!(small(), small());
    }
}
