use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::world::Pose;

/// Length and waypoint count of generated and ground-truth trajectories.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrajectorySpec {
    pub length_m: f64,
    pub waypoints: usize,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        Self {
            length_m: 15.0,
            waypoints: 16,
        }
    }
}

/// A planar trajectory stored as per-waypoint increments in the robot frame.
/// Waypoint `m` is the sum of the first `m + 1` increments.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    increments: Vec<[f64; 2]>,
}

/// Exact prefix sum of increments.
pub fn waypoints_from_increments(increments: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    if increments.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("increments"));
    }
    let mut acc = [0.0, 0.0];
    Ok(increments
        .iter()
        .map(|d| {
            acc = [acc[0] + d[0], acc[1] + d[1]];
            acc
        })
        .collect())
}

impl Trajectory {
    pub fn from_increments(increments: Vec<[f64; 2]>) -> Result<Self> {
        if increments.is_empty() {
            return Err(Error::Empty("trajectory"));
        }
        if increments.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("increments"));
        }
        Ok(Self { increments })
    }

    /// Interleaved `[dx0, dy0, dx1, dy1, ...]`.
    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if !flat.len().is_multiple_of(2) {
            return Err(Error::shape("trajectory", format!("{} values", flat.len())));
        }
        Self::from_increments(flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect())
    }

    /// Difference waypoints (the implicit waypoint 0 is the origin).
    pub fn from_waypoints(waypoints: &[[f64; 2]]) -> Result<Self> {
        let mut prev = [0.0, 0.0];
        let inc = waypoints
            .iter()
            .map(|w| {
                let d = [w[0] - prev[0], w[1] - prev[1]];
                prev = *w;
                d
            })
            .collect();
        Self::from_increments(inc)
    }

    pub fn increments(&self) -> &[[f64; 2]] {
        &self.increments
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    pub fn flat(&self) -> Vec<f64> {
        self.increments.iter().flatten().copied().collect()
    }

    pub fn waypoints(&self) -> Vec<[f64; 2]> {
        waypoints_from_increments(&self.increments).expect("increments are finite by construction")
    }

    /// Sum of increment norms.
    pub fn arc_length(&self) -> f64 {
        self.increments.iter().map(|d| d[0].hypot(d[1])).sum()
    }

    pub fn world_waypoints(&self, pose: &Pose) -> Vec<[f64; 2]> {
        self.waypoints().into_iter().map(|w| pose.to_world(w)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unit_increments_give_integer_waypoints() {
        let t = Trajectory::from_increments(vec![[1.0, 0.0]; 16]).unwrap();
        for (m, w) in t.waypoints().iter().enumerate() {
            assert_eq!(*w, [(m + 1) as f64, 0.0]);
        }
        assert_eq!(t.arc_length(), 16.0);
    }

    #[test]
    fn non_finite_increments_are_rejected() {
        assert!(waypoints_from_increments(&[[f64::NAN, 0.0]]).is_err());
        assert!(Trajectory::from_increments(vec![[0.0, f64::INFINITY]]).is_err());
    }

    proptest! {
        #[test]
        fn differencing_inverts_prefix_sum(v in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..32)) {
            let inc: Vec<[f64; 2]> = v.into_iter().map(|(a, b)| [a, b]).collect();
            let t = Trajectory::from_increments(inc.clone()).unwrap();
            let back = Trajectory::from_waypoints(&t.waypoints()).unwrap();
            for (a, b) in back.increments().iter().zip(&inc) {
                prop_assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
            }
        }
    }
}
