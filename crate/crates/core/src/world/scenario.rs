use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{GridWorld, Pose, ROBOT_RADIUS_M};
use crate::error::{Error, Result};
use crate::oracle::distance_field;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioMode {
    /// Travel distance in (15, 60] m.
    Train,
    /// Travel distance beyond 50 m.
    Test,
}

impl ScenarioMode {
    fn accepts(self, d: f64) -> bool {
        match self {
            Self::Train => d > 15.0 && d <= 60.0,
            Self::Test => d > 50.0 && d.is_finite(),
        }
    }

    fn search_limit(self) -> f64 {
        match self {
            Self::Train => 60.0,
            Self::Test => f64::INFINITY,
        }
    }
}

impl std::str::FromStr for ScenarioMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Self::Train),
            "test" => Ok(Self::Test),
            other => Err(Error::Config(format!("unknown mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for ScenarioMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Train => "train",
            Self::Test => "test",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scenario {
    pub start: Pose,
    pub goal: [f64; 2],
    /// A* travel distance between the two cells (meters).
    pub travel_distance: f64,
}

const START_ATTEMPTS: usize = 24;
const CELL_DRAWS: usize = 4096;

/// Draw a start pose and goal whose travel distance fits `mode`. Both sit at
/// cell centers with at least a robot radius of clearance.
pub fn sample_scenario(world: &GridWorld, rng: &mut impl Rng, mode: ScenarioMode) -> Result<Scenario> {
    let n = world.width() * world.height();
    for _ in 0..START_ATTEMPTS {
        let Some(start) = (0..CELL_DRAWS)
            .map(|_| world.cell_of_index(rng.random_range(0..n)))
            .find(|&c| world.is_free(c) && world.clearance_at(c) >= ROBOT_RADIUS_M)
        else {
            continue;
        };
        let dist = distance_field(world, start, mode.search_limit())?;
        let candidates: Vec<usize> = dist
            .iter()
            .enumerate()
            .filter(|&(i, &d)| mode.accepts(d) && world.clearance()[i] >= ROBOT_RADIUS_M)
            .map(|(i, _)| i)
            .collect();
        if candidates.is_empty() {
            continue;
        }
        let goal = candidates[rng.random_range(0..candidates.len())];
        let s = world.center(start);
        let heading = PI - rng.random::<f64>() * 2.0 * PI;
        return Ok(Scenario {
            start: Pose::new(s[0], s[1], heading),
            goal: world.center(world.cell_of_index(goal)),
            travel_distance: dist[goal],
        });
    }
    Err(Error::ScenarioExhausted(START_ATTEMPTS))
}
