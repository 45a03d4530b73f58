//! Travel distances and ground-truth trajectories on a traversability map.
//!
//! Search is 8-connected with octile step costs: one cell orthogonally, √2
//! diagonally. A diagonal step is only allowed when both orthogonal cells it
//! brushes are traversable, so the straight segment between consecutive path
//! cells never crosses an obstacle. Path costs are kept as integer counts of
//! orthogonal and diagonal steps; since √2 is irrational, equal-length optimal
//! paths have identical counts and every search returns bit-identical lengths.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::trajectory::{Trajectory, TrajectorySpec};
use crate::world::{Cell, GridWorld, Pose};

/// Off-grid or obstacle query points snap to a traversable cell this close.
pub const SNAP_TOLERANCE_M: f64 = 1.0;

#[derive(Clone, Debug, PartialEq)]
pub struct PathResult {
    pub cells: Vec<Cell>,
    /// Meters.
    pub length: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Cost {
    orth: u32,
    diag: u32,
}

impl Cost {
    fn cells(self) -> f64 {
        self.orth as f64 + self.diag as f64 * SQRT_2
    }

    fn step(self, diagonal: bool) -> Self {
        if diagonal {
            Self {
                diag: self.diag + 1,
                ..self
            }
        } else {
            Self {
                orth: self.orth + 1,
                ..self
            }
        }
    }
}

#[derive(PartialEq)]
struct Entry {
    f: f64,
    h: f64,
    index: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // Min-heap on f, then on h (prefer nodes closer to the goal), then index.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.h.total_cmp(&self.h))
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn octile(a: Cell, b: Cell) -> f64 {
    let dx = a.0.abs_diff(b.0) as f64;
    let dy = a.1.abs_diff(b.1) as f64;
    dx.max(dy) - dx.min(dy) + dx.min(dy) * SQRT_2
}

/// Traversable successors of `c` with whether the move is diagonal.
fn successors(world: &GridWorld, c: Cell) -> impl Iterator<Item = (Cell, bool)> + '_ {
    world.neighbors8(c).filter_map(move |n| {
        if !world.is_free(n) {
            return None;
        }
        let diagonal = n.0 != c.0 && n.1 != c.1;
        if diagonal && !(world.is_free((n.0, c.1)) && world.is_free((c.0, n.1))) {
            return None;
        }
        Some((n, diagonal))
    })
}

fn check_endpoint(world: &GridWorld, c: Cell, what: &str) -> Result<()> {
    if c.0 >= world.width() || c.1 >= world.height() || !world.is_free(c) {
        return Err(Error::NotTraversable(format!("{what} cell {c:?}")));
    }
    Ok(())
}

/// Optimal 8-connected path between two traversable cells (A* with the
/// octile heuristic).
pub fn shortest_path(world: &GridWorld, from: Cell, to: Cell) -> Result<PathResult> {
    check_endpoint(world, from, "start")?;
    check_endpoint(world, to, "goal")?;
    let n = world.width() * world.height();
    let mut g: Vec<Option<Cost>> = vec![None; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    let (si, ti) = (world.index(from), world.index(to));
    g[si] = Some(Cost::default());
    let h0 = octile(from, to);
    open.push(Entry {
        f: h0,
        h: h0,
        index: si,
    });
    while let Some(Entry { index, .. }) = open.pop() {
        if closed[index] {
            continue;
        }
        closed[index] = true;
        if index == ti {
            break;
        }
        let c = world.cell_of_index(index);
        let gc = g[index].expect("popped node has a cost");
        for (nb, diagonal) in successors(world, c) {
            let ni = world.index(nb);
            if closed[ni] {
                continue;
            }
            let cand = gc.step(diagonal);
            if g[ni].is_none_or(|old| cand.cells() < old.cells()) {
                g[ni] = Some(cand);
                parent[ni] = index;
                let h = octile(nb, to);
                open.push(Entry {
                    f: cand.cells() + h,
                    h,
                    index: ni,
                });
            }
        }
    }
    let cost = g[ti].ok_or(Error::Unreachable)?;
    let mut cells = vec![to];
    let mut i = ti;
    while i != si {
        i = parent[i];
        cells.push(world.cell_of_index(i));
    }
    cells.reverse();
    Ok(PathResult {
        cells,
        length: cost.cells() * world.resolution(),
    })
}

pub fn shortest_path_from_pose(world: &GridWorld, from: &Pose, to: Cell) -> Result<PathResult> {
    let start = world.cell_at(from.xy()).ok_or(Error::InvalidPose {
        x: from.x,
        y: from.y,
        reason: "off grid",
    })?;
    shortest_path(world, start, to)
}

/// Cell for a query point: its own cell if traversable, else the nearest
/// traversable cell within [`SNAP_TOLERANCE_M`].
pub fn snap(world: &GridWorld, p: [f64; 2]) -> Result<Cell> {
    if let Some(c) = world.cell_at(p).filter(|&c| world.is_free(c)) {
        return Ok(c);
    }
    world.nearest_free(p, SNAP_TOLERANCE_M, 0.0).ok_or_else(|| {
        Error::NotTraversable(format!(
            "no traversable cell within {SNAP_TOLERANCE_M} m of ({:.2}, {:.2})",
            p[0], p[1]
        ))
    })
}

/// A* travel distance in meters between two world points.
pub fn travel_distance(world: &GridWorld, point: [f64; 2], goal: [f64; 2]) -> Result<f64> {
    let a = snap(world, point)?;
    let b = snap(world, goal)?;
    Ok(shortest_path(world, a, b)?.length)
}

/// Single-source Dijkstra distances (meters) to every cell, stopping once
/// costs exceed `max_len`. Unreached cells are `f64::INFINITY`.
pub fn distance_field(world: &GridWorld, from: Cell, max_len: f64) -> Result<Vec<f64>> {
    check_endpoint(world, from, "source")?;
    let n = world.width() * world.height();
    let mut g: Vec<Option<Cost>> = vec![None; n];
    let mut done = vec![false; n];
    let mut open = BinaryHeap::new();
    let si = world.index(from);
    g[si] = Some(Cost::default());
    open.push(Entry {
        f: 0.0,
        h: 0.0,
        index: si,
    });
    let limit = max_len / world.resolution();
    while let Some(Entry { index, f, .. }) = open.pop() {
        if done[index] {
            continue;
        }
        if f > limit {
            break;
        }
        done[index] = true;
        let gc = g[index].expect("popped node has a cost");
        for (nb, diagonal) in successors(world, world.cell_of_index(index)) {
            let ni = world.index(nb);
            if done[ni] {
                continue;
            }
            let cand = gc.step(diagonal);
            if g[ni].is_none_or(|old| cand.cells() < old.cells()) {
                g[ni] = Some(cand);
                open.push(Entry {
                    f: cand.cells(),
                    h: 0.0,
                    index: ni,
                });
            }
        }
    }
    Ok(g.iter()
        .zip(&done)
        .map(|(c, &d)| match c {
            Some(c) if d => c.cells() * world.resolution(),
            _ => f64::INFINITY,
        })
        .collect())
}

/// Point at arc length `s` along a polyline with cumulative lengths `cum`.
fn point_at(poly: &[[f64; 2]], cum: &[f64], s: f64) -> [f64; 2] {
    let k = cum.partition_point(|&c| c < s).clamp(1, poly.len() - 1);
    let seg = cum[k] - cum[k - 1];
    let t = if seg > 0.0 {
        ((s - cum[k - 1]) / seg).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (a, b) = (poly[k - 1], poly[k]);
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// The A* path as a polyline: the exact start position followed by the
/// centers of every later path cell.
pub fn path_polyline(world: &GridWorld, start: &Pose, path: &PathResult) -> Vec<[f64; 2]> {
    std::iter::once(start.xy())
        .chain(path.cells.iter().skip(1).map(|&c| world.center(c)))
        .collect()
}

/// Ground truth: the A* path from `start` toward `goal`, truncated at
/// `spec.length_m` of arc length (or its full length if shorter), resampled to
/// `spec.waypoints` points equally spaced in arc length, expressed in the
/// start pose's frame and differenced into increments.
pub fn ground_truth_trajectory(
    world: &GridWorld,
    start: &Pose,
    goal: [f64; 2],
    spec: &TrajectorySpec,
) -> Result<Trajectory> {
    let goal_cell = snap(world, goal)?;
    let path = shortest_path_from_pose(world, start, goal_cell)?;
    let poly = path_polyline(world, start, &path);
    let mut cum = Vec::with_capacity(poly.len());
    cum.push(0.0);
    for w in poly.windows(2) {
        let last = *cum.last().unwrap();
        cum.push(last + (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]));
    }
    let total = *cum.last().unwrap();
    let m = spec.waypoints;
    let spacing = spec.length_m / m as f64;
    if poly.len() < 2 || total < spacing {
        return Err(Error::PathTooShort { length: total, spacing });
    }
    let length = total.min(spec.length_m);
    let waypoints: Vec<[f64; 2]> = (1..=m)
        .map(|i| start.to_robot(point_at(&poly, &cum, length * i as f64 / m as f64)))
        .collect();
    Trajectory::from_waypoints(&waypoints)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn open(n: usize, res: f64) -> GridWorld {
        GridWorld::from_traversable(res, n, n, vec![true; n * n]).unwrap()
    }

    #[test]
    fn identical_endpoints_give_zero_length() {
        let w = open(10, 0.25);
        let p = shortest_path(&w, (3, 4), (3, 4)).unwrap();
        assert_eq!(p.cells, vec![(3, 4)]);
        assert_eq!(p.length, 0.0);
    }

    #[test]
    fn straight_corridor_length() {
        // 10 m corridor, 1 m wide, at 0.25 m resolution.
        let (w, h) = (40, 4);
        let world = GridWorld::from_traversable(0.25, w, h, vec![true; w * h]).unwrap();
        let p = shortest_path(&world, (0, 1), (39, 1)).unwrap();
        assert!((p.length - 10.0).abs() <= 0.25);
        for pair in p.cells.windows(2) {
            assert!(pair[0].0.abs_diff(pair[1].0) <= 1 && pair[0].1.abs_diff(pair[1].1) <= 1);
        }
    }

    #[test]
    fn endpoints_must_be_traversable_and_connected() {
        let w = GridWorld::from_ascii(1.0, &["..#..", "..#..", "..#.."]).unwrap();
        assert!(matches!(shortest_path(&w, (0, 0), (4, 0)), Err(Error::Unreachable)));
        assert!(matches!(
            shortest_path(&w, (2, 0), (4, 0)),
            Err(Error::NotTraversable(_))
        ));
    }

    #[test]
    fn no_corner_cutting() {
        // The diagonal (0,1) -> (1,0) would brush the obstacle at (0,0).
        let w = GridWorld::from_ascii(1.0, &["..", "#."]).unwrap();
        let p = shortest_path(&w, (0, 1), (1, 0)).unwrap();
        assert_eq!(p.length, 2.0);
        assert_eq!(p.cells, vec![(0, 1), (1, 1), (1, 0)]);
    }

    #[test]
    fn travel_distance_open_field() {
        let w = open(200, 0.25);
        let d = travel_distance(&w, [5.0, 5.0], [35.0, 5.0]).unwrap();
        assert!((d - 30.0).abs() <= 0.25 * SQRT_2);
        assert_eq!(travel_distance(&w, [5.0, 5.0], [5.0, 5.0]).unwrap(), 0.0);
    }

    #[test]
    fn travel_distance_snaps_within_tolerance_only() {
        let mut t = vec![true; 40 * 40];
        for iy in 0..40 {
            for ix in 20..40 {
                t[iy * 40 + ix] = false;
            }
        }
        let w = GridWorld::from_traversable(0.25, 40, 40, t).unwrap();
        // 0.5 m inside the obstacle: snaps.
        assert!(travel_distance(&w, [5.5, 2.0], [1.0, 2.0]).is_ok());
        // 3 m inside: no.
        assert!(travel_distance(&w, [8.0, 2.0], [1.0, 2.0]).is_err());
    }

    #[test]
    fn dijkstra_field_agrees_with_a_star() {
        let w = GridWorld::from_ascii(
            0.5,
            &["..........", ".#######..", ".#.....#..", ".#.###.#..", "...#...#.."],
        )
        .unwrap();
        let field = distance_field(&w, (0, 0), f64::INFINITY).unwrap();
        for iy in 0..w.height() {
            for ix in 0..w.width() {
                let c = (ix, iy);
                match shortest_path(&w, (0, 0), c) {
                    Ok(p) => assert_eq!(p.length, field[w.index(c)]),
                    Err(_) => assert!(field[w.index(c)].is_infinite()),
                }
            }
        }
    }

    #[test]
    fn straight_ground_truth_has_uniform_increments() {
        let w = open(200, 0.25);
        let start = Pose::new(10.125, 25.125, 0.0);
        let gt = ground_truth_trajectory(&w, &start, [45.125, 25.125], &TrajectorySpec::default()).unwrap();
        assert_eq!(gt.len(), 16);
        for d in gt.increments() {
            assert!((d[0] - 0.9375).abs() < 1e-9 && d[1].abs() < 1e-9, "{d:?}");
        }
    }

    #[test]
    fn goal_behind_robot_turns_around() {
        let w = open(200, 0.25);
        let start = Pose::new(25.125, 25.125, 0.0);
        let gt = ground_truth_trajectory(&w, &start, [-0.0 + 2.125, 25.125], &TrajectorySpec::default()).unwrap();
        let wps = gt.waypoints();
        assert!(wps.last().unwrap()[0] < -14.0);
        assert!((gt.arc_length() - 15.0).abs() <= 2.0 * 0.25);
    }

    #[test]
    fn short_paths_resample_over_their_full_length() {
        let w = open(100, 0.25);
        let start = Pose::new(10.125, 10.125, PI / 2.0);
        let gt = ground_truth_trajectory(&w, &start, [10.125, 18.125], &TrajectorySpec::default()).unwrap();
        let last = *gt.waypoints().last().unwrap();
        assert!((last[0] - 8.0).abs() < 1e-9 && last[1].abs() < 1e-9);
        assert!(matches!(
            ground_truth_trajectory(&w, &start, [10.125, 10.625], &TrajectorySpec::default()),
            Err(Error::PathTooShort { .. })
        ));
    }
}
