use dtg_core::dataset::Dataset;
use dtg_core::model::{DtgModel, ModelConfig};
use dtg_core::navsim::{run_episode, run_with_planner, Planner, SimConfig};
use dtg_core::oracle::ground_truth_trajectory;
use dtg_core::training::{TrainConfig, Trainer};
use dtg_core::trajectory::{Trajectory, TrajectorySpec};
use dtg_core::world::{
    generate_world, sample_scenario, FeatureMix, GridWorld, Observation, ObservationSpec, Pose, ScenarioMode, WorldSpec,
};
use dtg_core::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Oracle<'a> {
    world: &'a GridWorld,
    goal: [f64; 2],
}

impl Planner for Oracle<'_> {
    fn plan(&mut self, _obs: &Observation, pose: &Pose) -> Result<Vec<Trajectory>> {
        let t = ground_truth_trajectory(self.world, pose, self.goal, &TrajectorySpec::default())
            .or_else(|_| Trajectory::from_waypoints(&[pose.to_robot(self.goal); 16]))?;
        Ok(vec![t])
    }
}

fn corridor(seed: u64) -> GridWorld {
    let spec = WorldSpec {
        size_m: 80.0,
        resolution: 0.5,
        feature_mix: FeatureMix::Corridor,
        min_corridor_width_m: 3.0,
    };
    generate_world(seed, &spec).unwrap()
}

#[test]
fn oracle_plans_reach_the_goal() {
    let cfg = SimConfig::default();
    let spec = ObservationSpec::default();
    let mut reached = 0;
    for seed in 0..4 {
        let world = corridor(seed);
        let sc = sample_scenario(&world, &mut ChaCha8Rng::seed_from_u64(seed), ScenarioMode::Test).unwrap();
        let mut planner = Oracle {
            world: &world,
            goal: sc.goal,
        };
        let r = run_with_planner(&world, &spec, &mut planner, sc.start, sc.goal, &cfg, None).unwrap();
        println!("{seed}: {:.1} m path, {r:?}", sc.travel_distance);
        reached += r.reached as usize;
    }
    assert!(reached >= 3);
}

fn straight_corridor() -> GridWorld {
    let wall = "#".repeat(120);
    let inner = format!("#{}#", ".".repeat(118));
    let mut rows = vec![wall.as_str()];
    rows.extend(std::iter::repeat_n(inner.as_str(), 10));
    rows.push(wall.as_str());
    GridWorld::from_ascii(0.5, &rows).unwrap()
}

#[test]
fn goal_inside_the_radius_is_reached_at_once() {
    let world = straight_corridor();
    let model = DtgModel::new(&small_model(), 0).unwrap();
    let cfg = SimConfig {
        goal_radius_m: 60.0,
        ..Default::default()
    };
    let r = run_episode(&world, &model, Pose::new(3.0, 3.0, 0.0), [55.0, 3.0], &cfg, 1, None).unwrap();
    assert!(r.reached);
    assert_eq!((r.steps, r.interventions), (0, 0));
    assert!(r.travel_distance.abs() < 1e-12);
}

fn small_model() -> ModelConfig {
    let mut cfg = ModelConfig::default();
    cfg.encoder.scan_hidden = vec![64];
    cfg.encoder.velocity_hidden = vec![8];
    cfg.encoder.fusion_hidden = vec![64];
    cfg.encoder.condition_dim = 32;
    cfg.crnn.embed_dim = 16;
    cfg.crnn.time_hidden = 16;
    cfg.crnn.hidden = 32;
    cfg
}

#[test]
fn overfit_model_drives_a_straight_corridor() {
    let world = straight_corridor();
    let cfg = small_model();
    let data = Dataset::build(
        vec![world.clone()],
        64,
        ScenarioMode::Train,
        3,
        cfg.observation,
        cfg.trajectory,
    )
    .unwrap();
    let tc = TrainConfig {
        epochs: 150,
        beta: 0.0,
        ..Default::default()
    };
    let mut tr = Trainer::new(DtgModel::new(&cfg, 0).unwrap(), &data, tc).unwrap();
    tr.run(|_, _| Ok(())).unwrap();
    let (start, goal) = (Pose::new(3.0, 3.0, 0.0), [55.0, 3.0]);
    let r = run_episode(&world, tr.model(), start, goal, &SimConfig::default(), 7, None).unwrap();
    println!("{r:?}");
    assert!(r.reached);
    assert_eq!(r.interventions, 0);
    let line = (goal[0] - start.x).hypot(goal[1] - start.y);
    assert!((r.travel_distance - line).abs() < 0.1 * line, "{} m", r.travel_distance);
}
