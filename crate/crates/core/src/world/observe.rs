use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{GridWorld, Pose};
use crate::error::{Error, Result};

/// Sensor layout of an [`Observation`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObservationSpec {
    /// Rays per range scan.
    pub rays: usize,
    pub max_range_m: f64,
    /// Stacked scans, oldest first.
    pub scan_frames: usize,
    /// Velocity history depth.
    pub velocity_frames: usize,
    /// Time between stacked scans (seconds).
    pub scan_period_s: f64,
    /// Time between velocity frames (seconds).
    pub velocity_period_s: f64,
}

impl Default for ObservationSpec {
    fn default() -> Self {
        Self {
            rays: 64,
            max_range_m: 20.0,
            scan_frames: 3,
            velocity_frames: 10,
            scan_period_s: 0.2,
            velocity_period_s: 0.1,
        }
    }
}

/// What the robot perceives at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    /// `scan_frames * rays` ranges in meters, oldest scan first.
    pub scans: Vec<f64>,
    /// `(linear m/s, angular rad/s)` per frame, oldest first.
    pub velocities: Vec<[f64; 2]>,
    /// Goal in the robot frame of the newest pose (meters).
    pub goal: [f64; 2],
}

impl Observation {
    pub fn validate(&self, spec: &ObservationSpec) -> Result<()> {
        if self.scans.len() != spec.scan_frames * spec.rays || self.velocities.len() != spec.velocity_frames {
            return Err(Error::shape(
                "observation",
                format!(
                    "{} ranges / {} velocity frames, expected {} / {}",
                    self.scans.len(),
                    self.velocities.len(),
                    spec.scan_frames * spec.rays,
                    spec.velocity_frames
                ),
            ));
        }
        let finite = self.scans.iter().all(|v| v.is_finite())
            && self.velocities.iter().flatten().all(|v| v.is_finite())
            && self.goal.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("observation"));
        }
        Ok(())
    }

    /// Assemble an observation from scan poses (oldest first), a velocity
    /// history and a world-frame goal.
    pub fn capture(
        world: &GridWorld,
        poses: &[Pose],
        velocities: Vec<[f64; 2]>,
        goal_world: [f64; 2],
        spec: &ObservationSpec,
    ) -> Result<Self> {
        let newest = *poses.last().ok_or(Error::Empty("scan poses"))?;
        let mut scans = Vec::with_capacity(poses.len() * spec.rays);
        for p in poses {
            scans.extend(render_scan(world, p, spec.rays, spec.max_range_m)?);
        }
        let obs = Self {
            scans,
            velocities,
            goal: newest.to_robot(goal_world),
        };
        obs.validate(spec)?;
        Ok(obs)
    }
}

/// Past scan poses (oldest first, ending at `pose`) and a velocity history for
/// a robot that has been driving at constant `(v, omega)`. Past poses that
/// would sit on an obstacle are replaced by the current pose.
pub fn synthesize_history(
    world: &GridWorld,
    pose: Pose,
    v: f64,
    omega: f64,
    spec: &ObservationSpec,
) -> (Vec<Pose>, Vec<[f64; 2]>) {
    let poses = (0..spec.scan_frames)
        .rev()
        .map(|k| {
            let past = pose.advance(v, omega, -(k as f64) * spec.scan_period_s);
            if world.is_free_at(past.xy()) {
                past
            } else {
                pose
            }
        })
        .collect();
    (poses, vec![[v, omega]; spec.velocity_frames])
}

/// Range scan by exact grid traversal. Ray `r` points along
/// `heading + 2*pi*r/rays`; the range is the distance to the boundary of the
/// first non-traversable (or off-grid) cell, clipped to `max_range`.
pub fn render_scan(world: &GridWorld, pose: &Pose, rays: usize, max_range: f64) -> Result<Vec<f64>> {
    let start = world.cell_at(pose.xy()).ok_or(Error::InvalidPose {
        x: pose.x,
        y: pose.y,
        reason: "off grid",
    })?;
    if !world.is_free(start) {
        return Err(Error::InvalidPose {
            x: pose.x,
            y: pose.y,
            reason: "on an obstacle",
        });
    }
    Ok((0..rays)
        .map(|r| {
            let bearing = pose.heading + 2.0 * PI * r as f64 / rays as f64;
            cast(world, pose.xy(), bearing, max_range)
        })
        .collect())
}

fn cast(world: &GridWorld, origin: [f64; 2], bearing: f64, max_range: f64) -> f64 {
    let res = world.resolution();
    let (dy, dx) = bearing.sin_cos();
    let (mut ix, mut iy) = ((origin[0] / res).floor() as i64, (origin[1] / res).floor() as i64);
    let axis = |o: f64, d: f64, i: i64| -> (i64, f64, f64) {
        if d > 0.0 {
            (1, ((i + 1) as f64 * res - o) / d, res / d)
        } else if d < 0.0 {
            (-1, (i as f64 * res - o) / d, -res / d)
        } else {
            (0, f64::INFINITY, f64::INFINITY)
        }
    };
    let (sx, mut tx, ddx) = axis(origin[0], dx, ix);
    let (sy, mut ty, ddy) = axis(origin[1], dy, iy);
    let (w, h) = (world.width() as i64, world.height() as i64);
    loop {
        let t = if tx < ty {
            ix += sx;
            let t = tx;
            tx += ddx;
            t
        } else {
            iy += sy;
            let t = ty;
            ty += ddy;
            t
        };
        if t >= max_range {
            return max_range;
        }
        if ix < 0 || iy < 0 || ix >= w || iy >= h || !world.is_free((ix as usize, iy as usize)) {
            return t.max(0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Minimum entry distance over every blocked cell's box (and the grid
    /// boundary), by slab intersection.
    fn brute_force_range(world: &GridWorld, o: [f64; 2], bearing: f64, max_range: f64) -> f64 {
        let (dy, dx) = bearing.sin_cos();
        let res = world.resolution();
        let slab = |lo: f64, hi: f64, o: f64, d: f64| -> (f64, f64) {
            if d.abs() < 1e-15 {
                if o >= lo && o <= hi {
                    (f64::NEG_INFINITY, f64::INFINITY)
                } else {
                    (f64::INFINITY, f64::NEG_INFINITY)
                }
            } else {
                let (a, b) = ((lo - o) / d, (hi - o) / d);
                (a.min(b), a.max(b))
            }
        };
        let mut best = max_range;
        for iy in 0..world.height() {
            for ix in 0..world.width() {
                if world.is_free((ix, iy)) {
                    continue;
                }
                let (x0, x1) = slab(ix as f64 * res, (ix + 1) as f64 * res, o[0], dx);
                let (y0, y1) = slab(iy as f64 * res, (iy + 1) as f64 * res, o[1], dy);
                let (enter, exit) = (x0.max(y0), x1.min(y1));
                if enter <= exit && exit >= 0.0 {
                    best = best.min(enter.max(0.0));
                }
            }
        }
        // Leaving the grid counts as a hit.
        let [wm, hm] = world.size_m();
        let (_, x1) = slab(0.0, wm, o[0], dx);
        let (_, y1) = slab(0.0, hm, o[1], dy);
        best.min(x1.min(y1))
    }

    #[test]
    fn open_field_rays_reach_max_range() {
        let world = GridWorld::from_traversable(0.25, 200, 200, vec![true; 40000]).unwrap();
        let scan = render_scan(&world, &Pose::new(25.0, 25.0, 0.3), 64, 20.0).unwrap();
        assert!(scan.iter().all(|&r| r == 20.0));
    }

    #[test]
    fn flat_wall_ahead() {
        // Wall occupies x >= 10 m.
        let (w, h) = (60, 40);
        let t: Vec<bool> = (0..w * h).map(|i| i % w < 40).collect();
        let world = GridWorld::from_traversable(0.25, w, h, t).unwrap();
        let scan = render_scan(&world, &Pose::new(7.0, 5.0, 0.0), 64, 20.0).unwrap();
        assert!((scan[0] - 3.0).abs() <= 0.25, "forward ray {}", scan[0]);
    }

    #[test]
    fn pose_on_obstacle_is_invalid() {
        let world = GridWorld::from_ascii(1.0, &["#."]).unwrap();
        assert!(matches!(
            render_scan(&world, &Pose::new(0.5, 0.5, 0.0), 8, 5.0),
            Err(Error::InvalidPose { .. })
        ));
    }

    #[test]
    fn corner_scene_matches_exhaustive_intersection() {
        let world = GridWorld::from_ascii(
            0.5,
            &[
                "####################",
                "#..................#",
                "#..................#",
                "#.......############",
                "#.......############",
                "#.......#...........",
                "#.......#...........",
                "#..................#",
                "#..................#",
                "####################",
            ],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let pose = loop {
                let p = Pose::new(
                    rng.random_range(0.5..10.0),
                    rng.random_range(0.5..5.0),
                    rng.random_range(-PI..PI),
                );
                if world.is_free_at(p.xy()) {
                    break p;
                }
            };
            let scan = render_scan(&world, &pose, 32, 8.0).unwrap();
            for (r, &range) in scan.iter().enumerate() {
                let bearing = pose.heading + 2.0 * PI * r as f64 / 32.0;
                let oracle = brute_force_range(&world, pose.xy(), bearing, 8.0);
                assert!(
                    (range - oracle).abs() <= world.resolution(),
                    "ray {r}: {range} vs {oracle}"
                );
            }
        }
    }

    #[test]
    fn capture_orders_scans_and_expresses_goal_in_robot_frame() {
        let world = GridWorld::from_traversable(0.25, 400, 400, vec![true; 160_000]).unwrap();
        let spec = ObservationSpec::default();
        let pose = Pose::new(50.0, 50.0, PI / 2.0);
        let (poses, vel) = synthesize_history(&world, pose, 1.0, 0.0, &spec);
        assert_eq!(poses.len(), 3);
        assert!((poses[0].y - (50.0 - 0.4)).abs() < 1e-9);
        assert_eq!(*poses.last().unwrap(), pose);
        let obs = Observation::capture(&world, &poses, vel, [50.0, 60.0], &spec).unwrap();
        assert!((obs.goal[0] - 10.0).abs() < 1e-9 && obs.goal[1].abs() < 1e-9);
        assert!(obs.scans.iter().all(|&r| (0.0..=20.0).contains(&r)));
    }
}
