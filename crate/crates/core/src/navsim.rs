//! Closed-loop navigation: the generator replans at a fixed rate and a
//! dynamic-window local planner drives a unicycle robot along the latest plan.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diffusion::{sample_batch, SamplerMode};
use crate::error::{Error, Result};
use crate::model::DtgModel;
use crate::perception::encode;
use crate::trajectory::Trajectory;
use crate::world::{
    normalize_angle, render_scan, sample_scenario, GridWorld, Observation, ObservationSpec, Pose, Scenario,
    ScenarioMode, CLEARANCE_CLIP_M, ROBOT_RADIUS_M,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub v_max: f64,
    pub omega_max: f64,
    /// Linear acceleration bound (m/s^2).
    pub accel_max: f64,
    /// Angular acceleration bound (rad/s^2).
    pub alpha_max: f64,
    pub control_hz: f64,
    pub replan_hz: f64,
    /// Forward-simulation horizon of each candidate arc (seconds).
    pub horizon_s: f64,
    pub v_samples: usize,
    pub omega_samples: usize,
    /// Arcs passing closer than this to a scan endpoint are discarded.
    pub collision_radius_m: f64,
    /// Free distance that earns the full clearance score.
    pub free_path_m: f64,
    /// Free path ends where an arc comes this close to the scanned boundary.
    pub comfort_m: f64,
    pub w_heading: f64,
    pub w_clearance: f64,
    pub w_velocity: f64,
    /// The tracked waypoint is the first one at least this far away.
    pub lookahead_m: f64,
    /// Trajectories sampled per replan; the best one by [`score_plan`] is kept.
    /// With 1 every fresh sample is executed as is.
    pub candidates: usize,
    /// Waypoints closer than this to a scan endpoint do not count as free.
    pub plan_margin_m: f64,
    /// Weight of goal progress against the free fraction when scoring plans.
    pub w_progress: f64,
    pub goal_radius_m: f64,
    /// Translational stall longer than this counts as a deadlock.
    pub deadlock_s: f64,
    pub max_steps: usize,
    pub max_interventions: usize,
    /// Posterior sampling keeps the candidates of one replan distinct.
    pub sampler: SamplerMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            v_max: 1.0,
            omega_max: 1.0,
            accel_max: 1.0,
            alpha_max: 2.0,
            control_hz: 20.0,
            replan_hz: 5.0,
            horizon_s: 2.0,
            v_samples: 5,
            omega_samples: 11,
            collision_radius_m: 0.1,
            free_path_m: 3.0,
            comfort_m: 0.3,
            w_heading: 0.8,
            w_clearance: 0.2,
            w_velocity: 0.1,
            lookahead_m: 3.0,
            candidates: 4,
            plan_margin_m: 0.5,
            w_progress: 0.5,
            goal_radius_m: 2.0,
            deadlock_s: 3.0,
            max_steps: 6000,
            max_interventions: 10,
            sampler: SamplerMode::Posterior,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            self.v_max,
            self.omega_max,
            self.accel_max,
            self.alpha_max,
            self.control_hz,
            self.replan_hz,
            self.horizon_s,
        ];
        if pos.iter().any(|v| !(*v > 0.0))
            || !(self.free_path_m >= 0.1)
            || self.v_samples < 2
            || self.omega_samples < 2
            || self.candidates == 0
        {
            return Err(Error::Config(
                "simulator rates, limits and sample counts must be positive".into(),
            ));
        }
        if self.replan_hz > self.control_hz {
            return Err(Error::Config("replanning cannot be faster than control".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RobotState {
    pub pose: Pose,
    pub v: f64,
    pub omega: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Command {
    pub v: f64,
    pub omega: f64,
    /// Every candidate arc collided; the command is a full stop.
    pub blocked: bool,
}

/// Apply `(v, omega)` for `dt` seconds with exact unicycle integration.
/// The command is clipped to the velocity limits first.
pub fn step_kinematics(state: &RobotState, v: f64, omega: f64, dt: f64, cfg: &SimConfig) -> RobotState {
    let v = v.clamp(-cfg.v_max, cfg.v_max);
    let omega = omega.clamp(-cfg.omega_max, cfg.omega_max);
    RobotState {
        pose: state.pose.advance(v, omega, dt),
        v,
        omega,
    }
}

fn samples(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if hi - lo < 1e-12 {
        return vec![lo];
    }
    (0..n)
        .map(|i| {
            let f = i as f64 / (n - 1) as f64;
            lo * (1.0 - f) + hi * f
        })
        .collect()
}

/// Scan endpoints that hit something, in the robot frame.
pub fn scan_points(scan: &[f64], max_range: f64) -> Vec<[f64; 2]> {
    let n = scan.len();
    scan.iter()
        .enumerate()
        .filter(|(_, &r)| r < max_range)
        .map(|(i, &r)| {
            let a = 2.0 * PI * i as f64 / n as f64;
            [r * a.cos(), r * a.sin()]
        })
        .collect()
}

/// Free space seen by one range scan (robot frame). A point is clear when it
/// lies inside the scan polygon with `margin` to spare along both bracketing
/// rays and keeps `margin` from every endpoint.
pub struct FreeSpace<'a> {
    ranges: &'a [f64],
    hits: Vec<[f64; 2]>,
}

impl<'a> FreeSpace<'a> {
    pub fn new(ranges: &'a [f64], max_range: f64) -> Self {
        Self {
            ranges,
            hits: scan_points(ranges, max_range),
        }
    }

    /// Keep only endpoints within `reach` of the robot; later queries must stay
    /// within `reach - margin` for the result to be exact.
    pub fn within(mut self, reach: f64) -> Self {
        self.hits.retain(|o| o[0].hypot(o[1]) <= reach);
        self
    }

    pub fn clear(&self, p: [f64; 2], margin: f64) -> bool {
        let n = self.ranges.len();
        if n == 0 {
            return false;
        }
        let r = p[0].hypot(p[1]);
        if r > 1e-9 {
            let f = p[1].atan2(p[0]).rem_euclid(2.0 * PI) / (2.0 * PI) * n as f64;
            let i0 = (f.floor() as usize) % n;
            let i1 = (i0 + 1) % n;
            if r + margin > self.ranges[i0].min(self.ranges[i1]) {
                return false;
            }
        }
        let m2 = margin * margin;
        self.hits
            .iter()
            .all(|o| (o[0] - p[0]).powi(2) + (o[1] - p[1]).powi(2) >= m2)
    }

    /// Whether the straight segment from the robot to `p` stays clear.
    pub fn visible(&self, p: [f64; 2], margin: f64) -> bool {
        let steps = (p[0].hypot(p[1]) / 0.1).ceil().max(1.0) as usize;
        (1..=steps).all(|k| {
            let f = k as f64 / steps as f64;
            self.clear([p[0] * f, p[1] * f], margin)
        })
    }
}

/// The first waypoint at least `lookahead_m` away, pulled back along the plan
/// until the straight line to it stays clear.
fn pick_target(waypoints: &[[f64; 2]], free: &FreeSpace, cfg: &SimConfig) -> Result<[f64; 2]> {
    if waypoints.is_empty() {
        return Err(Error::Empty("waypoints"));
    }
    let far = waypoints
        .iter()
        .position(|w| w[0].hypot(w[1]) >= cfg.lookahead_m)
        .unwrap_or(waypoints.len() - 1);
    let margin = 2.0 * cfg.collision_radius_m;
    Ok((0..=far)
        .rev()
        .map(|i| waypoints[i])
        .find(|&w| free.visible(w, margin))
        .unwrap_or(waypoints[0]))
}

/// Dynamic-window step. `waypoints` are in the robot frame and `scan` is the
/// current range scan. Candidates are scored by
/// `w_heading * heading + w_clearance * free_path + w_velocity * speed`; arcs
/// that leave the scanned free space by less than `collision_radius_m` are
/// discarded. Ties go to the lowest `(v, omega)`.
pub fn local_plan(
    state: &RobotState,
    waypoints: &[[f64; 2]],
    scan: &[f64],
    max_range: f64,
    cfg: &SimConfig,
) -> Result<Command> {
    let free = FreeSpace::new(scan, max_range);
    let target = pick_target(waypoints, &free, cfg)?;
    let dt = 1.0 / cfg.control_hz;
    let vs = samples(
        (state.v - cfg.accel_max * dt).max(0.0),
        (state.v + cfg.accel_max * dt).min(cfg.v_max),
        cfg.v_samples,
    );
    let ws = samples(
        (state.omega - cfg.alpha_max * dt).max(-cfg.omega_max),
        (state.omega + cfg.alpha_max * dt).min(cfg.omega_max),
        cfg.omega_samples,
    );
    let sim_dt = 0.1;
    let n_sim = (cfg.horizon_s / sim_dt).ceil() as usize;
    // Free path is measured over the time needed to cover `free_path_m` at full speed.
    let n_free = (cfg.free_path_m / cfg.v_max / sim_dt).round() as usize;
    let reach = cfg.v_max * sim_dt * n_sim.max(n_free) as f64 + cfg.collision_radius_m.max(cfg.comfort_m);
    let near = free.within(reach);
    let mut best: Option<(f64, f64, f64)> = None;
    for &v in &vs {
        'arcs: for &w in &ws {
            let mut p = Pose::new(0.0, 0.0, 0.0);
            let mut end = p;
            let mut free_steps = None;
            for k in 0..n_sim.max(n_free) {
                p = p.advance(v, w, sim_dt);
                if k < n_sim {
                    end = p;
                    if !near.clear([p.x, p.y], cfg.collision_radius_m) {
                        continue 'arcs;
                    }
                }
                if free_steps.is_none() && k < n_free && !near.clear([p.x, p.y], cfg.comfort_m) {
                    free_steps = Some(k);
                }
            }
            let free_steps = free_steps.unwrap_or(n_free);
            let (dx, dy) = (target[0] - end.x, target[1] - end.y);
            let heading = if dx.hypot(dy) < 1e-9 {
                1.0
            } else {
                1.0 - normalize_angle(dy.atan2(dx) - end.heading).abs() / PI
            };
            let clearance = v * free_steps as f64 * sim_dt / cfg.free_path_m;
            let score = cfg.w_heading * heading + cfg.w_clearance * clearance + cfg.w_velocity * v / cfg.v_max;
            if best.is_none_or(|(s, _, _)| score > s) {
                best = Some((score, v, w));
            }
        }
    }
    Ok(match best {
        Some((_, v, omega)) => Command {
            v,
            omega,
            blocked: false,
        },
        None => Command {
            v: 0.0,
            omega: 0.0,
            blocked: true,
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndReason {
    Goal,
    StepBudget,
    InterventionCap,
}

impl std::fmt::Display for EndReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Goal => "goal",
            Self::StepBudget => "step-budget",
            Self::InterventionCap => "intervention-cap",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeResult {
    pub reached: bool,
    /// Integral of `|v| dt` (meters).
    pub travel_distance: f64,
    pub interventions: usize,
    /// Control steps executed.
    pub steps: usize,
    pub final_pose: Pose,
    pub end: EndReason,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceEvent {
    None,
    Replan,
    Intervention,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub pose: Pose,
    pub v: f64,
    pub omega: f64,
    pub event: TraceEvent,
}

/// Per-step poses and every plan (world-frame waypoints) of one episode.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub plans: Vec<(usize, Vec<[f64; 2]>)>,
}

impl Trace {
    pub fn write_poses_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "step,x,y,heading,v,omega,event")?;
        for r in &self.rows {
            let ev = match r.event {
                TraceEvent::None => "",
                TraceEvent::Replan => "replan",
                TraceEvent::Intervention => "intervention",
            };
            writeln!(
                w,
                "{},{},{},{},{},{},{ev}",
                r.step, r.pose.x, r.pose.y, r.pose.heading, r.v, r.omega
            )?;
        }
        Ok(())
    }

    pub fn write_plans_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "step,index,x,y")?;
        for (step, wps) in &self.plans {
            for (i, p) in wps.iter().enumerate() {
                writeln!(w, "{step},{i},{},{}", p[0], p[1])?;
            }
        }
        Ok(())
    }
}

/// Traversability estimate of a robot-frame plan from one range scan: the
/// fraction of leading waypoints seen free (not occluded, and at least
/// `plan_margin_m` from every scan endpoint) plus `w_progress` times the
/// straight-line progress toward `goal` at the last of them, per meter of plan.
pub fn score_plan(waypoints: &[[f64; 2]], scan: &[f64], max_range: f64, goal: [f64; 2], cfg: &SimConfig) -> f64 {
    if waypoints.is_empty() || scan.is_empty() {
        return f64::NEG_INFINITY;
    }
    let free = FreeSpace::new(scan, max_range);
    let k = waypoints
        .iter()
        .take_while(|&&w| free.clear(w, cfg.plan_margin_m))
        .count();
    let mut length = 0.0;
    let mut prev = [0.0, 0.0];
    for w in waypoints {
        length += (w[0] - prev[0]).hypot(w[1] - prev[1]);
        prev = *w;
    }
    let progress = match k {
        0 => 0.0,
        _ => {
            let last = waypoints[k - 1];
            let gain = goal[0].hypot(goal[1]) - (goal[0] - last[0]).hypot(goal[1] - last[1]);
            (gain / length.max(1e-9)).clamp(-1.0, 1.0)
        }
    };
    k as f64 / waypoints.len() as f64 + cfg.w_progress * progress
}

/// Where a rescued robot is put down: the nearest cell with full clearance,
/// falling back to the robot radius and then to any free cell.
fn relocate(world: &GridWorld, pose: Pose) -> Result<Pose> {
    let cell = world
        .nearest_free(pose.xy(), 10.0, CLEARANCE_CLIP_M)
        .or_else(|| world.nearest_free(pose.xy(), 10.0, ROBOT_RADIUS_M))
        .or_else(|| world.nearest_free(pose.xy(), f64::INFINITY, 0.0))
        .ok_or(Error::NotTraversable("world has no traversable cell".into()))?;
    let c = world.center(cell);
    Ok(Pose::new(c[0], c[1], pose.heading))
}

/// Produces candidate robot-frame trajectories. `pose` is the true pose,
/// which learned planners ignore.
pub trait Planner {
    fn plan(&mut self, obs: &Observation, pose: &Pose) -> Result<Vec<Trajectory>>;
}

/// The trained generator with its own noise stream.
pub struct ModelPlanner<'a> {
    model: &'a DtgModel,
    rng: ChaCha8Rng,
    sampler: SamplerMode,
    candidates: usize,
}

impl<'a> ModelPlanner<'a> {
    pub fn new(model: &'a DtgModel, seed: u64, sampler: SamplerMode, candidates: usize) -> Self {
        Self {
            model,
            rng: ChaCha8Rng::seed_from_u64(seed),
            sampler,
            candidates: candidates.max(1),
        }
    }
}

impl Planner for ModelPlanner<'_> {
    fn plan(&mut self, obs: &Observation, _pose: &Pose) -> Result<Vec<Trajectory>> {
        let c = encode(self.model, obs)?;
        sample_batch(self.model, &vec![c; self.candidates], &mut self.rng, self.sampler)
    }
}

/// Drive from `start` toward `goal` with the generator replanning.
/// All randomness comes from `seed`.
pub fn run_episode(
    world: &GridWorld,
    model: &DtgModel,
    start: Pose,
    goal: [f64; 2],
    cfg: &SimConfig,
    seed: u64,
    trace: Option<&mut Trace>,
) -> Result<EpisodeResult> {
    let spec = model.config().observation;
    let mut planner = ModelPlanner::new(model, seed, cfg.sampler, cfg.candidates);
    run_with_planner(world, &spec, &mut planner, start, goal, cfg, trace)
}

pub fn run_with_planner(
    world: &GridWorld,
    spec: &ObservationSpec,
    planner: &mut impl Planner,
    start: Pose,
    goal: [f64; 2],
    cfg: &SimConfig,
    mut trace: Option<&mut Trace>,
) -> Result<EpisodeResult> {
    cfg.validate()?;
    if !world.is_free_at(start.xy()) {
        return Err(Error::NotTraversable(format!("start ({:.2}, {:.2})", start.x, start.y)));
    }
    if !world.is_free_at(goal) {
        return Err(Error::NotTraversable(format!("goal ({:.2}, {:.2})", goal[0], goal[1])));
    }
    let dt = 1.0 / cfg.control_hz;
    let replan_every = (cfg.control_hz / cfg.replan_hz).round().max(1.0) as usize;
    let vel_every = (spec.velocity_period_s * cfg.control_hz).round().max(1.0) as usize;
    let stall_limit = (cfg.deadlock_s * cfg.control_hz).round() as usize;

    let mut state = RobotState {
        pose: start,
        v: 0.0,
        omega: 0.0,
    };
    let first = render_scan(world, &start, spec.rays, spec.max_range_m)?;
    let mut scans: VecDeque<Vec<f64>> = std::iter::repeat_n(first, spec.scan_frames).collect();
    let mut vels: VecDeque<[f64; 2]> = std::iter::repeat_n([0.0, 0.0], spec.velocity_frames).collect();
    let mut plan: Vec<[f64; 2]> = Vec::new();
    let mut force_replan = true;
    let (mut travel, mut interventions, mut stalled, mut since_replan) = (0.0, 0usize, 0usize, 0usize);

    let dist_to_goal = |p: &Pose| (goal[0] - p.x).hypot(goal[1] - p.y);
    let finish = |state: &RobotState, travel, interventions, steps, end| EpisodeResult {
        reached: end == EndReason::Goal,
        travel_distance: travel,
        interventions,
        steps,
        final_pose: state.pose,
        end,
    };

    for step in 0..cfg.max_steps {
        if dist_to_goal(&state.pose) <= cfg.goal_radius_m {
            return Ok(finish(&state, travel, interventions, step, EndReason::Goal));
        }
        let mut event = TraceEvent::None;
        if force_replan || since_replan >= replan_every {
            let scan = render_scan(world, &state.pose, spec.rays, spec.max_range_m)?;
            scans.pop_front();
            scans.push_back(scan);
            let goal_local = state.pose.to_robot(goal);
            let candidates = planner.plan(
                &Observation {
                    scans: scans.iter().flatten().copied().collect(),
                    velocities: vels.iter().copied().collect(),
                    goal: goal_local,
                },
                &state.pose,
            )?;
            let latest = scans.back().map(Vec::as_slice).unwrap_or_default();
            let score = |wps: &[[f64; 2]]| score_plan(wps, latest, spec.max_range_m, goal_local, cfg);
            // The unfinished part of the current plan competes with the new
            // samples. A single candidate is always executed as sampled.
            let mut best: Option<(f64, Vec<[f64; 2]>)> = None;
            if cfg.candidates > 1 && !force_replan && !plan.is_empty() {
                let local: Vec<[f64; 2]> = plan.iter().map(|&p| state.pose.to_robot(p)).collect();
                let nearest = (0..local.len())
                    .min_by(|&a, &b| {
                        local[a][0]
                            .hypot(local[a][1])
                            .total_cmp(&local[b][0].hypot(local[b][1]))
                    })
                    .unwrap_or(0);
                let rest = local[nearest + 1..].to_vec();
                if !rest.is_empty() {
                    best = Some((score(&rest), plan[nearest + 1..].to_vec()));
                }
            }
            for traj in &candidates {
                let wps = traj.waypoints();
                let sc = score(&wps);
                if best.as_ref().is_none_or(|(b, _)| sc > *b) {
                    best = Some((sc, traj.world_waypoints(&state.pose)));
                }
            }
            plan = best.ok_or(Error::Empty("planner candidates"))?.1;
            if let Some(t) = trace.as_deref_mut() {
                t.plans.push((step, plan.clone()));
            }
            force_replan = false;
            since_replan = 0;
            event = TraceEvent::Replan;
        }
        since_replan += 1;

        let scan = render_scan(world, &state.pose, spec.rays, spec.max_range_m)?;
        let local: Vec<[f64; 2]> = plan.iter().map(|&p| state.pose.to_robot(p)).collect();
        let cmd = local_plan(&state, &local, &scan, spec.max_range_m, cfg)?;
        let mut intervene = cmd.blocked;
        if !cmd.blocked {
            state = step_kinematics(&state, cmd.v, cmd.omega, dt, cfg);
            travel += state.v.abs() * dt;
            if !world.is_free_at(state.pose.xy()) {
                intervene = true;
            }
            stalled = if state.v.abs() < 0.05 { stalled + 1 } else { 0 };
            if stalled > stall_limit {
                intervene = true;
            }
        }
        if intervene {
            interventions += 1;
            state = RobotState {
                pose: relocate(world, state.pose)?,
                v: 0.0,
                omega: 0.0,
            };
            stalled = 0;
            force_replan = true;
            event = TraceEvent::Intervention;
        }
        if (step + 1) % vel_every == 0 {
            vels.pop_front();
            vels.push_back([state.v, state.omega]);
        }
        if let Some(t) = trace.as_deref_mut() {
            t.rows.push(TraceRow {
                step,
                pose: state.pose,
                v: state.v,
                omega: state.omega,
                event,
            });
        }
        if interventions >= cfg.max_interventions {
            return Ok(finish(
                &state,
                travel,
                interventions,
                step + 1,
                EndReason::InterventionCap,
            ));
        }
    }
    let end = if dist_to_goal(&state.pose) <= cfg.goal_radius_m {
        EndReason::Goal
    } else {
        EndReason::StepBudget
    };
    Ok(finish(&state, travel, interventions, cfg.max_steps, end))
}

/// One seeded episode of a batch.
#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub index: usize,
    pub scenario: Scenario,
    pub result: EpisodeResult,
}

/// Scenario and noise streams of episode `index` under `seed`.
pub fn episode_seeds(seed: u64, index: usize) -> (u64, u64) {
    let base = crate::derive_seed(seed, index as u64);
    (crate::derive_seed(base, 0), crate::derive_seed(base, 1))
}

/// Run `n` episodes between sampled test scenarios of one world. When
/// `traces` is given it receives one trace per episode.
pub fn run_episodes(
    world: &GridWorld,
    model: &DtgModel,
    n: usize,
    seed: u64,
    cfg: &SimConfig,
    mut traces: Option<&mut Vec<Trace>>,
) -> Result<Vec<Episode>> {
    (0..n)
        .map(|index| {
            let (s_seed, m_seed) = episode_seeds(seed, index);
            let scenario = sample_scenario(world, &mut ChaCha8Rng::seed_from_u64(s_seed), ScenarioMode::Test)?;
            let mut trace = Trace::default();
            let result = run_episode(
                world,
                model,
                scenario.start,
                scenario.goal,
                cfg,
                m_seed,
                traces.is_some().then_some(&mut trace),
            )?;
            if let Some(t) = traces.as_deref_mut() {
                t.push(trace);
            }
            Ok(Episode {
                index,
                scenario,
                result,
            })
        })
        .collect()
}

pub const EPISODES_HEADER: &str =
    "episode,start_x,start_y,start_heading,goal_x,goal_y,path_length,reached,travel_distance,interventions,steps,end";

pub fn write_episodes_csv(episodes: &[Episode], w: &mut impl Write) -> Result<()> {
    writeln!(w, "{EPISODES_HEADER}")?;
    for e in episodes {
        let (s, r) = (&e.scenario, &e.result);
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            e.index,
            s.start.x,
            s.start.y,
            s.start.heading,
            s.goal[0],
            s.goal[1],
            s.travel_distance,
            r.reached as u8,
            r.travel_distance,
            r.interventions,
            r.steps,
            r.end
        )?;
    }
    Ok(())
}
