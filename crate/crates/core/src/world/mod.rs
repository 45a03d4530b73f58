//! Traversability worlds and synthetic robot observations.

mod clearance;
mod file;
mod generate;
mod observe;
mod scenario;

use std::f64::consts::PI;

pub use clearance::{clearance_field, CLEARANCE_CLIP_M};
pub use file::{read_world, write_world, WORLD_MAGIC, WORLD_VERSION};
pub use generate::{generate_world, FeatureMix, WorldSpec};
pub use observe::{render_scan, synthesize_history, Observation, ObservationSpec};
pub use scenario::{sample_scenario, Scenario, ScenarioMode};

use crate::error::{Error, Result};
use crate::grad::FieldRef;

/// Robot radius used for clearance requirements (meters).
pub const ROBOT_RADIUS_M: f64 = 0.5;

/// Wrap an angle into `(-pi, pi]`.
pub fn normalize_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    pub fn xy(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    /// Robot-frame point (x forward, y left) to world frame.
    pub fn to_world(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.heading.sin_cos();
        [self.x + c * p[0] - s * p[1], self.y + s * p[0] + c * p[1]]
    }

    /// Exact unicycle motion under constant `(v, omega)` for `dt` seconds
    /// (negative `dt` integrates backwards).
    pub fn advance(&self, v: f64, omega: f64, dt: f64) -> Pose {
        if omega.abs() < 1e-12 {
            let (s, c) = self.heading.sin_cos();
            return Pose::new(self.x + v * dt * c, self.y + v * dt * s, self.heading);
        }
        let h1 = self.heading + omega * dt;
        let r = v / omega;
        Pose::new(
            self.x + r * (h1.sin() - self.heading.sin()),
            self.y - r * (h1.cos() - self.heading.cos()),
            h1,
        )
    }

    /// World-frame point to robot frame.
    pub fn to_robot(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.heading.sin_cos();
        let (dx, dy) = (p[0] - self.x, p[1] - self.y);
        [c * dx + s * dy, -s * dx + c * dy]
    }
}

/// Integer cell coordinates `(ix, iy)`.
pub type Cell = (usize, usize);

/// Rasterized traversability map with its clipped clearance field.
///
/// Cells are stored row-major (`iy * width + ix`); cell `(ix, iy)` covers
/// `[ix*res, (ix+1)*res) x [iy*res, (iy+1)*res)` in world meters.
#[derive(Clone, Debug, PartialEq)]
pub struct GridWorld {
    resolution: f64,
    width: usize,
    height: usize,
    traversable: Vec<bool>,
    clearance: Vec<f64>,
}

impl GridWorld {
    pub fn from_traversable(resolution: f64, width: usize, height: usize, traversable: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || traversable.len() != width * height {
            return Err(Error::InfeasibleSpec(format!(
                "grid {width}x{height} with {} cells",
                traversable.len()
            )));
        }
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(Error::InfeasibleSpec(format!("resolution {resolution}")));
        }
        let clearance = clearance_field(&traversable, width, height, resolution);
        Ok(Self {
            resolution,
            width,
            height,
            traversable,
            clearance,
        })
    }

    /// Parse an ASCII map: `#` is an obstacle, anything else traversable. The
    /// first text line is the top row (largest `y`).
    pub fn from_ascii(resolution: f64, rows: &[&str]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        let mut traversable = vec![false; width * height];
        for (line, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::InfeasibleSpec("ragged ascii map".into()));
            }
            let iy = height - 1 - line;
            for (ix, ch) in row.bytes().enumerate() {
                traversable[iy * width + ix] = ch != b'#';
            }
        }
        Self::from_traversable(resolution, width, height, traversable)
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn size_m(&self) -> [f64; 2] {
        [
            self.width as f64 * self.resolution,
            self.height as f64 * self.resolution,
        ]
    }

    pub fn traversable(&self) -> &[bool] {
        &self.traversable
    }

    pub fn clearance(&self) -> &[f64] {
        &self.clearance
    }

    pub fn index(&self, c: Cell) -> usize {
        c.1 * self.width + c.0
    }

    pub fn cell_of_index(&self, i: usize) -> Cell {
        (i % self.width, i / self.width)
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.traversable[self.index(c)]
    }

    pub fn clearance_at(&self, c: Cell) -> f64 {
        self.clearance[self.index(c)]
    }

    /// Cell containing a world point, or `None` off-grid.
    pub fn cell_at(&self, p: [f64; 2]) -> Option<Cell> {
        let fx = (p[0] / self.resolution).floor();
        let fy = (p[1] / self.resolution).floor();
        if !(fx >= 0.0 && fy >= 0.0 && fx < self.width as f64 && fy < self.height as f64) {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    pub fn center(&self, c: Cell) -> [f64; 2] {
        [
            (c.0 as f64 + 0.5) * self.resolution,
            (c.1 as f64 + 0.5) * self.resolution,
        ]
    }

    /// Whether a world point lies on a traversable cell (off-grid is not).
    pub fn is_free_at(&self, p: [f64; 2]) -> bool {
        self.cell_at(p).is_some_and(|c| self.is_free(c))
    }

    /// Clearance of the cell containing `p`; zero off-grid.
    pub fn clearance_at_point(&self, p: [f64; 2]) -> f64 {
        self.cell_at(p).map_or(0.0, |c| self.clearance_at(c))
    }

    pub fn clearance_ref(&self) -> FieldRef<'_> {
        FieldRef {
            data: &self.clearance,
            width: self.width,
            height: self.height,
            resolution: self.resolution,
        }
    }

    /// Clearance interpolated between cell centers.
    pub fn clearance_bilinear(&self, p: [f64; 2]) -> f64 {
        crate::grad::bilinear(&self.clearance_ref(), p[0], p[1]).0
    }

    pub fn neighbors8(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        let (w, h) = (self.width as isize, self.height as isize);
        let (x, y) = (c.0 as isize, c.1 as isize);
        (-1..=1isize)
            .flat_map(move |dy| (-1..=1isize).map(move |dx| (dx, dy)))
            .filter(|&(dx, dy)| dx != 0 || dy != 0)
            .map(move |(dx, dy)| (x + dx, y + dy))
            .filter(move |&(nx, ny)| nx >= 0 && ny >= 0 && nx < w && ny < h)
            .map(|(nx, ny)| (nx as usize, ny as usize))
    }

    /// Nearest traversable cell to `p` (by center distance) within `max_dist`
    /// meters, optionally requiring a minimum clearance.
    pub fn nearest_free(&self, p: [f64; 2], max_dist: f64, min_clearance: f64) -> Option<Cell> {
        let r = (max_dist / self.resolution).ceil() as isize + 1;
        let cx = (p[0] / self.resolution).floor() as isize;
        let cy = (p[1] / self.resolution).floor() as isize;
        let mut best: Option<(f64, Cell)> = None;
        for iy in (cy - r).max(0)..=(cy + r).min(self.height as isize - 1) {
            for ix in (cx - r).max(0)..=(cx + r).min(self.width as isize - 1) {
                let c = (ix as usize, iy as usize);
                if !self.is_free(c) || self.clearance_at(c) < min_clearance {
                    continue;
                }
                let q = self.center(c);
                let d = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
                if d <= max_dist && best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, c));
                }
            }
        }
        best.map(|(_, c)| c)
    }

    /// Flood fill over 8-connected traversable cells from `start`.
    pub fn component_of(&self, start: Cell) -> Vec<bool> {
        let mut seen = vec![false; self.traversable.len()];
        if !self.is_free(start) {
            return seen;
        }
        let mut stack = vec![start];
        seen[self.index(start)] = true;
        while let Some(c) = stack.pop() {
            for n in self.neighbors8(c) {
                let i = self.index(n);
                if self.traversable[i] && !seen[i] {
                    seen[i] = true;
                    stack.push(n);
                }
            }
        }
        seen
    }

    /// Every traversable cell reaches every other one.
    pub fn is_connected(&self) -> bool {
        let Some(first) = self.traversable.iter().position(|&t| t) else {
            return false;
        };
        let seen = self.component_of(self.cell_of_index(first));
        self.traversable.iter().zip(&seen).all(|(&t, &s)| !t || s)
    }
}
