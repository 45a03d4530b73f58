use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dtg_core::config::DtgConfig;
use dtg_core::dataset::Dataset;
use dtg_core::diffusion::SamplerMode;
use dtg_core::eval::{evaluate_model, evaluate_straight_line};
use dtg_core::metrics::{aggregate, read_records_csv, write_records_csv, EvalRecord, RatioVariant};
use dtg_core::model::DtgModel;
use dtg_core::navsim::{run_episodes, write_episodes_csv};
use dtg_core::training::{write_log_csv, Trainer};
use dtg_core::world::{generate_world, read_world, write_world, GridWorld, ScenarioMode, WorldSpec};

use crate::manifest::Manifest;
use crate::svg;
use crate::{
    Command, ConfigCmd, DatasetBuildArgs, DatasetCmd, EvalArgs, ReportArgs, SimArgs, TrainArgs, WorldCmd, WorldGenArgs,
};

pub fn dispatch(cmd: Command, argv: &[String]) -> Result<()> {
    match cmd {
        Command::World(WorldCmd::Gen(a)) => world_gen(a, argv),
        Command::Dataset(DatasetCmd::Build(a)) => dataset_build(a, argv),
        Command::Train(a) => train(a, argv),
        Command::Eval(a) => eval(a, argv),
        Command::Sim(a) => sim(a, argv),
        Command::Report(a) => report(a),
        Command::Config(ConfigCmd::Defaults) => {
            print!("{}", DtgConfig::defaults_toml());
            Ok(())
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<DtgConfig> {
    match path {
        Some(p) => Ok(DtgConfig::load(p).with_context(|| format!("config {}", p.display()))?),
        None => Ok(DtgConfig::default()),
    }
}

fn load_world(path: &Path) -> Result<GridWorld> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_world(&mut BufReader::new(f)).with_context(|| format!("world {}", path.display()))
}

fn load_model(path: &Path) -> Result<DtgModel> {
    DtgModel::load(path).with_context(|| format!("checkpoint {}", path.display()))
}

fn load_dataset(path: &Path) -> Result<Dataset> {
    Dataset::load(path).with_context(|| format!("dataset {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn world_gen(a: WorldGenArgs, argv: &[String]) -> Result<()> {
    let spec = WorldSpec {
        size_m: a.size,
        resolution: a.resolution,
        feature_mix: a.preset.parse()?,
        min_corridor_width_m: a.corridor_width,
    };
    let world = generate_world(a.seed, &spec)?;
    let mut w = create(&a.out)?;
    write_world(&world, &mut w)?;
    w.flush()?;
    let cfg = DtgConfig {
        seed: a.seed,
        world: spec,
        ..Default::default()
    };
    Manifest::new("world gen", argv)
        .seed(a.seed)
        .config(cfg.to_toml_string()?)
        .output(&a.out)
        .write_beside(&a.out)?;
    Ok(())
}

fn world_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| p.extension().is_some_and(|e| e == "dtgw"));
    files.sort();
    if files.is_empty() {
        bail!(dtg_core::Error::Empty("world directory (no *.dtgw files)"));
    }
    Ok(files)
}

fn dataset_build(a: DatasetBuildArgs, argv: &[String]) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let seed = a.seed.unwrap_or(cfg.seed);
    let mode: ScenarioMode = a.mode.parse()?;
    let files = world_files(&a.worlds)?;
    let worlds = files.iter().map(|p| load_world(p)).collect::<Result<Vec<_>>>()?;
    let data = Dataset::build(worlds, a.n, mode, seed, cfg.model.observation, cfg.model.trajectory)?;
    data.save(&a.out)?;
    let mut m = Manifest::new("dataset build", argv)
        .seed(seed)
        .config(cfg.to_toml_string()?);
    for f in &files {
        m = m.input(f);
    }
    m.output(&a.out).write_beside(&a.out)?;
    eprintln!("{} scenarios from {} worlds", data.records.len(), files.len());
    Ok(())
}

fn train(a: TrainArgs, argv: &[String]) -> Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.train.seed = cfg.seed;
    if let Some(e) = a.epochs {
        cfg.train.epochs = e;
    }
    if let Some(b) = a.beta {
        cfg.train.beta = b;
    }
    if a.ablation {
        cfg.train.beta = 0.0;
    }
    let data = load_dataset(&a.dataset)?;
    let model = DtgModel::new(&cfg.model, cfg.seed)?;
    let mut trainer = Trainer::new(model, &data, cfg.train.clone())?;
    let every = cfg.train.checkpoint_every;
    trainer.run(|s, model| {
        eprintln!(
            "epoch {:>4}  L_d {:.5}  total {:.5}  gated {:>6}  buffer {:?}",
            s.epoch, s.mean_l_d, s.mean_total, s.gated_items, s.buffer
        );
        if every > 0 && (s.epoch + 1) % every == 0 {
            model.save(&with_suffix(&a.out, &format!(".e{}", s.epoch + 1)))?;
        }
        Ok(())
    })?;
    for msg in trainer.rejected_steps() {
        eprintln!("rejected: {msg}");
    }
    let log_path = a.log.clone().unwrap_or_else(|| with_suffix(&a.out, ".log.csv"));
    let mut w = create(&log_path)?;
    write_log_csv(trainer.log(), &mut w)?;
    w.flush()?;
    trainer.model().save(&a.out)?;
    Manifest::new("train", argv)
        .seed(cfg.seed)
        .config(cfg.to_toml_string()?)
        .input(&a.dataset)
        .output(&a.out)
        .output(&log_path)
        .write_beside(&a.out)?;
    Ok(())
}

fn eval(a: EvalArgs, argv: &[String]) -> Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.eval.seed = cfg.seed;
    cfg.eval.timing |= a.timing;
    if let Some(s) = &a.sampler {
        cfg.eval.sampler = s.parse::<SamplerMode>()?;
    }
    let data = load_dataset(&a.scenarios)?;
    let mut m = Manifest::new("eval", argv).seed(cfg.seed).input(&a.scenarios);
    let records = match (&a.ckpt, a.straight_line) {
        (_, true) => evaluate_straight_line(&data)?,
        (Some(ck), false) => {
            let model = load_model(ck)?;
            m = m.input(ck);
            cfg.model = model.config().clone();
            evaluate_model(&model, &data, &cfg.eval)?
        }
        (None, false) => bail!(dtg_core::Error::Config(
            "either --ckpt or --straight-line is required".into()
        )),
    };
    let mut w = create(&a.out)?;
    write_records_csv(&records, &mut w)?;
    w.flush()?;
    print!("{}", aggregate(&records)?.to_text());
    m.config(cfg.to_toml_string()?).output(&a.out).write_beside(&a.out)?;
    Ok(())
}

fn sim(a: SimArgs, argv: &[String]) -> Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let model = load_model(&a.ckpt)?;
    cfg.model = model.config().clone();
    let world = load_world(&a.world)?;
    let mut traces = Vec::new();
    let episodes = run_episodes(
        &world,
        &model,
        a.episodes,
        cfg.seed,
        &cfg.sim,
        a.trace.is_some().then_some(&mut traces),
    )?;
    let mut w = create(&a.out)?;
    write_episodes_csv(&episodes, &mut w)?;
    w.flush()?;
    if let Some(dir) = &a.trace {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (e, t) in episodes.iter().zip(&traces) {
            let mut w = create(&dir.join(format!("episode_{:03}_poses.csv", e.index)))?;
            t.write_poses_csv(&mut w)?;
            w.flush()?;
            let mut w = create(&dir.join(format!("episode_{:03}_plans.csv", e.index)))?;
            t.write_plans_csv(&mut w)?;
            w.flush()?;
        }
    }
    let reached = episodes.iter().filter(|e| e.result.reached).count();
    let interventions: usize = episodes.iter().map(|e| e.result.interventions).sum();
    println!(
        "episodes {}  reached {}  interventions {}",
        episodes.len(),
        reached,
        interventions
    );
    Manifest::new("sim", argv)
        .seed(cfg.seed)
        .config(cfg.to_toml_string()?)
        .input(&a.ckpt)
        .input(&a.world)
        .output(&a.out)
        .write_beside(&a.out)?;
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    if a.results.is_none() && a.trace.is_none() {
        bail!(dtg_core::Error::Config(
            "nothing to report: give a results file or --trace".into()
        ));
    }
    if let Some(path) = &a.results {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let records = read_records_csv(&text)?;
        let summary = aggregate(&records)?;
        print!("{}", summary.to_text());
        let dir = a
            .out_dir
            .clone()
            .or_else(|| path.parent().map(Path::to_path_buf))
            .unwrap_or_default();
        std::fs::create_dir_all(&dir)?;
        write_histograms(&records, &dir)?;
    }
    if let (Some(trace), Some(world)) = (&a.trace, &a.world) {
        let world = load_world(world)?;
        let dir = a.out_dir.clone().unwrap_or_else(|| trace.clone());
        std::fs::create_dir_all(&dir)?;
        let n = svg::render_traces(&world, trace, &dir)?;
        eprintln!("rendered {n} episode(s)");
    }
    Ok(())
}

fn write_histograms(records: &[EvalRecord], dir: &Path) -> Result<()> {
    let clearance: Vec<f64> = records.iter().map(|r| r.clearance_score).collect();
    std::fs::write(
        dir.join("clearance_hist.svg"),
        svg::histogram("Clearance traversability", &clearance, 20, (0.0, 1.0)),
    )?;
    for (v, name) in [(RatioVariant::Signed, "signed"), (RatioVariant::Literal, "literal")] {
        let vals: Vec<f64> = records.iter().filter_map(|r| r.ratio.map(|d| d.get(v))).collect();
        std::fs::write(
            dir.join(format!("ratio_{name}_hist.svg")),
            svg::histogram(&format!("Distance ratio ({name})"), &vals, 20, (0.0, 1.0)),
        )?;
    }
    Ok(())
}
