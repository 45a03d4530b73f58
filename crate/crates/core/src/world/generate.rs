use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GridWorld, ROBOT_RADIUS_M};
use crate::error::{Error, Result};

/// Which kind of layout to generate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMix {
    /// No obstacles at all.
    Open,
    /// A lattice of corridors with corners, junctions, dead ends and small plazas
    /// carved out of a non-traversable background.
    Corridor,
    /// Open ground with scattered buildings and round patches of grass.
    Campus,
}

impl std::str::FromStr for FeatureMix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(Self::Open),
            "corridor" => Ok(Self::Corridor),
            "campus" => Ok(Self::Campus),
            other => Err(Error::Config(format!("unknown preset {other:?}"))),
        }
    }
}

impl std::fmt::Display for FeatureMix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Open => "open",
            Self::Corridor => "corridor",
            Self::Campus => "campus",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldSpec {
    pub size_m: f64,
    pub resolution: f64,
    pub feature_mix: FeatureMix,
    pub min_corridor_width_m: f64,
}

impl Default for WorldSpec {
    fn default() -> Self {
        Self {
            size_m: 120.0,
            resolution: 0.25,
            feature_mix: FeatureMix::Corridor,
            min_corridor_width_m: 3.0,
        }
    }
}

/// Minimum side length so that test goals can sit beyond 50 m.
pub const MIN_WORLD_SIZE_M: f64 = 80.0;
const LATTICE_SPACING_M: f64 = 20.0;
const LATTICE_JITTER_M: f64 = 3.0;
const LATTICE_MARGIN_M: f64 = 5.0;
const EXTRA_EDGE_PROB: f64 = 0.5;
const PLAZA_PROB: f64 = 0.25;
const CAMPUS_COVERAGE: f64 = 0.3;

impl WorldSpec {
    fn validate(&self) -> Result<()> {
        if !(self.resolution.is_finite() && self.resolution > 0.0) {
            return Err(Error::InfeasibleSpec(format!("resolution {}", self.resolution)));
        }
        if self.min_corridor_width_m > self.size_m {
            return Err(Error::InfeasibleSpec(format!(
                "corridor width {} m exceeds world size {} m",
                self.min_corridor_width_m, self.size_m
            )));
        }
        if self.size_m < MIN_WORLD_SIZE_M {
            return Err(Error::InfeasibleSpec(format!(
                "world size {} m is below the {MIN_WORLD_SIZE_M} m minimum",
                self.size_m
            )));
        }
        if self.min_corridor_width_m < 2.0 * ROBOT_RADIUS_M {
            return Err(Error::InfeasibleSpec(format!(
                "corridor width {} m is narrower than the robot ({} m)",
                self.min_corridor_width_m,
                2.0 * ROBOT_RADIUS_M
            )));
        }
        Ok(())
    }
}

struct Canvas {
    res: f64,
    n: usize,
    cells: Vec<bool>,
}

impl Canvas {
    fn new(res: f64, n: usize, fill: bool) -> Self {
        Self {
            res,
            n,
            cells: vec![fill; n * n],
        }
    }

    /// Set every cell whose center lies in the axis-aligned box.
    fn rect(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, value: bool) {
        let lo = |v: f64| ((v / self.res - 0.5).ceil().max(0.0)) as usize;
        let hi = |v: f64| ((v / self.res - 0.5).floor().min(self.n as f64 - 1.0)) as isize;
        let (ix0, iy0) = (lo(x0), lo(y0));
        let (ix1, iy1) = (hi(x1), hi(y1));
        if ix1 < ix0 as isize || iy1 < iy0 as isize {
            return;
        }
        for iy in iy0..=iy1 as usize {
            for ix in ix0..=ix1 as usize {
                self.cells[iy * self.n + ix] = value;
            }
        }
    }

    fn disc(&mut self, cx: f64, cy: f64, r: f64, value: bool) {
        let n = self.n as isize;
        let c = |v: f64| (v / self.res) as isize;
        let rr = (r / self.res).ceil() as isize + 1;
        for iy in (c(cy) - rr).max(0)..=(c(cy) + rr).min(n - 1) {
            for ix in (c(cx) - rr).max(0)..=(c(cx) + rr).min(n - 1) {
                let px = (ix as f64 + 0.5) * self.res;
                let py = (iy as f64 + 0.5) * self.res;
                if (px - cx).powi(2) + (py - cy).powi(2) <= r * r {
                    self.cells[iy as usize * self.n + ix as usize] = value;
                }
            }
        }
    }
}

/// Deterministically generate a connected world for `(seed, spec)`.
pub fn generate_world(seed: u64, spec: &WorldSpec) -> Result<GridWorld> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (spec.size_m / spec.resolution).round() as usize;
    let canvas = match spec.feature_mix {
        FeatureMix::Open => Canvas::new(spec.resolution, n, true),
        FeatureMix::Corridor => corridors(&mut rng, spec, n),
        FeatureMix::Campus => campus(&mut rng, spec, n),
    };
    let world = GridWorld::from_traversable(spec.resolution, n, n, canvas.cells)?;
    let world = keep_largest_component(world)?;
    debug_assert!(world.is_connected());
    Ok(world)
}

fn lattice_axis(rng: &mut ChaCha8Rng, size: f64) -> Vec<f64> {
    let span = size - 2.0 * LATTICE_MARGIN_M;
    let k = ((span / LATTICE_SPACING_M).floor() as usize).max(1) + 1;
    let step = span / (k - 1) as f64;
    (0..k)
        .map(|i| {
            let base = LATTICE_MARGIN_M + step * i as f64;
            let jitter = if i == 0 || i == k - 1 {
                0.0
            } else {
                rng.random_range(-LATTICE_JITTER_M..=LATTICE_JITTER_M)
            };
            base + jitter
        })
        .collect()
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn corridors(rng: &mut ChaCha8Rng, spec: &WorldSpec, n: usize) -> Canvas {
    let mut canvas = Canvas::new(spec.resolution, n, false);
    let xs = lattice_axis(rng, spec.size_m);
    let ys = lattice_axis(rng, spec.size_m);
    let (kx, ky) = (xs.len(), ys.len());
    let node = |i: usize, j: usize| i * kx + j;

    let mut edges = Vec::new();
    for i in 0..ky {
        for j in 0..kx {
            if j + 1 < kx {
                edges.push((node(i, j), node(i, j + 1)));
            }
            if i + 1 < ky {
                edges.push((node(i, j), node(i + 1, j)));
            }
        }
    }
    edges.shuffle(rng);

    // Random spanning tree keeps the lattice connected; extra edges add loops.
    let mut parent: Vec<usize> = (0..kx * ky).collect();
    let w_min = spec.min_corridor_width_m;
    let pos = |id: usize| (xs[id % kx], ys[id / kx]);
    for (a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        let in_tree = ra != rb;
        if in_tree {
            parent[ra] = rb;
        }
        if in_tree || rng.random::<f64>() < EXTRA_EDGE_PROB {
            let width = rng.random_range(w_min..=2.0 * w_min);
            let half = width / 2.0;
            let ((xa, ya), (xb, yb)) = (pos(a), pos(b));
            canvas.rect(
                xa.min(xb) - half,
                ya.min(yb) - half,
                xa.max(xb) + half,
                ya.max(yb) + half,
                true,
            );
        }
    }
    for id in 0..kx * ky {
        if rng.random::<f64>() < PLAZA_PROB {
            let (x, y) = pos(id);
            let half = rng.random_range(1.5..=3.0) * w_min;
            canvas.rect(x - half, y - half, x + half, y + half, true);
        }
    }
    canvas
}

fn campus(rng: &mut ChaCha8Rng, spec: &WorldSpec, n: usize) -> Canvas {
    let mut canvas = Canvas::new(spec.resolution, n, true);
    let size = spec.size_m;
    let gap = spec.min_corridor_width_m;
    // Obstacle footprints as boxes; discs are tested by their bounding box.
    let mut placed: Vec<[f64; 4]> = Vec::new();
    let mut covered = 0.0;
    for _ in 0..600 {
        if covered >= CAMPUS_COVERAGE * size * size {
            break;
        }
        let building = rng.random::<f64>() < 0.7;
        let (w, h) = if building {
            (rng.random_range(6.0..=20.0), rng.random_range(6.0..=20.0))
        } else {
            let d = rng.random_range(4.0..=12.0);
            (d, d)
        };
        let x0 = rng.random_range(gap..=(size - gap - w));
        let y0 = rng.random_range(gap..=(size - gap - h));
        let bbox = [x0, y0, x0 + w, y0 + h];
        let clear = placed
            .iter()
            .all(|o| bbox[0] > o[2] + gap || o[0] > bbox[2] + gap || bbox[1] > o[3] + gap || o[1] > bbox[3] + gap);
        if !clear {
            continue;
        }
        if building {
            canvas.rect(bbox[0], bbox[1], bbox[2], bbox[3], false);
            covered += w * h;
        } else {
            canvas.disc(x0 + w / 2.0, y0 + h / 2.0, w / 2.0, false);
            covered += std::f64::consts::PI * w * w / 4.0;
        }
        placed.push(bbox);
    }
    canvas
}

fn keep_largest_component(world: GridWorld) -> Result<GridWorld> {
    let mut label = vec![usize::MAX; world.traversable().len()];
    let mut best = (0usize, usize::MAX);
    for start in 0..label.len() {
        if !world.traversable()[start] || label[start] != usize::MAX {
            continue;
        }
        let comp = world.component_of(world.cell_of_index(start));
        let mut count = 0;
        for (i, &inside) in comp.iter().enumerate() {
            if inside {
                label[i] = start;
                count += 1;
            }
        }
        if count > best.0 {
            best = (count, start);
        }
    }
    if best.0 == 0 {
        return Err(Error::InfeasibleSpec("generated world has no traversable cells".into()));
    }
    if best.0 == world.traversable().iter().filter(|&&t| t).count() {
        return Ok(world);
    }
    let cells = label.iter().map(|&l| l == best.1).collect();
    GridWorld::from_traversable(world.resolution(), world.width(), world.height(), cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(mix: FeatureMix, size: f64, width: f64) -> WorldSpec {
        WorldSpec {
            size_m: size,
            resolution: 0.25,
            feature_mix: mix,
            min_corridor_width_m: width,
        }
    }

    #[test]
    fn open_field_is_free_and_saturated() {
        let w = generate_world(7, &spec(FeatureMix::Open, 120.0, 3.0)).unwrap();
        assert_eq!(w.width(), 480);
        assert!(w.traversable().iter().all(|&t| t));
        assert!(w.clearance().iter().all(|&c| c == 1.0));
    }

    #[test]
    fn generation_is_deterministic() {
        for mix in [FeatureMix::Open, FeatureMix::Corridor, FeatureMix::Campus] {
            let a = generate_world(7, &spec(mix, 100.0, 3.0)).unwrap();
            let b = generate_world(7, &spec(mix, 100.0, 3.0)).unwrap();
            assert_eq!(a, b);
        }
        let a = generate_world(1, &spec(FeatureMix::Corridor, 100.0, 3.0)).unwrap();
        let b = generate_world(2, &spec(FeatureMix::Corridor, 100.0, 3.0)).unwrap();
        assert_ne!(a.traversable(), b.traversable());
    }

    #[test]
    fn generated_worlds_are_connected() {
        for seed in 0..4 {
            for mix in [FeatureMix::Corridor, FeatureMix::Campus] {
                let w = generate_world(seed, &spec(mix, 90.0, 2.0)).unwrap();
                assert!(w.is_connected(), "{mix} seed {seed}");
                let free = w.traversable().iter().filter(|&&t| t).count();
                assert!(free > w.traversable().len() / 10);
            }
        }
    }

    #[test]
    fn corridor_world_clearance_profile() {
        let w = generate_world(3, &spec(FeatureMix::Corridor, 120.0, 3.0)).unwrap();
        let res = w.resolution();
        let mut saw_center = false;
        let mut saw_wall = false;
        for iy in 1..w.height() - 1 {
            for ix in 1..w.width() - 1 {
                if !w.is_free((ix, iy)) {
                    continue;
                }
                let c = w.clearance_at((ix, iy));
                let touches_wall = [(ix - 1, iy), (ix + 1, iy), (ix, iy - 1), (ix, iy + 1)]
                    .iter()
                    .any(|&n| !w.is_free(n));
                if touches_wall {
                    assert!(c <= res + 1e-12, "wall-adjacent clearance {c}");
                    saw_wall = true;
                }
                saw_center |= c == 1.0;
            }
        }
        assert!(saw_center && saw_wall);
        // Every corridor is at least 3 m wide, so a 1.5 m half-width saturates the clip.
        assert!(w.clearance().iter().all(|&c| c <= 1.0));
    }

    #[test]
    fn infeasible_specs_are_rejected() {
        assert!(matches!(
            generate_world(0, &spec(FeatureMix::Corridor, 100.0, 150.0)),
            Err(Error::InfeasibleSpec(_))
        ));
        assert!(generate_world(0, &spec(FeatureMix::Corridor, 60.0, 3.0)).is_err());
        assert!(generate_world(0, &spec(FeatureMix::Corridor, 100.0, 0.5)).is_err());
    }
}
