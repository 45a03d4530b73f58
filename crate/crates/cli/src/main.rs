mod commands;
mod manifest;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Trajectory generation pipeline: worlds, datasets, training, evaluation,
/// closed-loop simulation and reports.
#[derive(Parser, Debug)]
#[command(name = "dtg", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Procedural worlds.
    #[command(subcommand)]
    World(WorldCmd),
    /// Scenario datasets.
    #[command(subcommand)]
    Dataset(DatasetCmd),
    /// Train a model on a dataset.
    Train(TrainArgs),
    /// Score a checkpoint on held-out scenarios.
    Eval(EvalArgs),
    /// Closed-loop episodes in one world.
    Sim(SimArgs),
    /// Summary table and SVG plots from results or traces.
    Report(ReportArgs),
    /// Configuration files.
    #[command(subcommand)]
    Config(ConfigCmd),
}

#[derive(Subcommand, Debug)]
pub enum WorldCmd {
    /// Generate one world file.
    Gen(WorldGenArgs),
}

#[derive(Args, Debug)]
pub struct WorldGenArgs {
    #[arg(long)]
    pub seed: u64,
    /// Side length in meters.
    #[arg(long, default_value_t = 120.0)]
    pub size: f64,
    /// open, corridor or campus.
    #[arg(long, default_value = "corridor")]
    pub preset: String,
    /// Meters per cell.
    #[arg(long, default_value_t = 0.25)]
    pub resolution: f64,
    /// Minimum corridor width in meters.
    #[arg(long, default_value_t = 3.0)]
    pub corridor_width: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum DatasetCmd {
    /// Sample scenarios from every world file in a directory.
    Build(DatasetBuildArgs),
}

#[derive(Args, Debug)]
pub struct DatasetBuildArgs {
    /// Directory of world files (*.dtgw), taken in name order.
    #[arg(long)]
    pub worlds: PathBuf,
    /// Scenarios per world.
    #[arg(long)]
    pub n: usize,
    /// train or test.
    #[arg(long)]
    pub mode: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sensor and trajectory layout come from the [model] section.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Final checkpoint; periodic ones get an `.e<epoch>` suffix.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-sample training log (default: `<out>.log.csv`).
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Train without the traversability term (beta = 0).
    #[arg(long, conflicts_with = "beta")]
    pub ablation: bool,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub ckpt: Option<PathBuf>,
    #[arg(long)]
    pub scenarios: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// chained or posterior.
    #[arg(long)]
    pub sampler: Option<String>,
    /// Record per-scenario inference time.
    #[arg(long)]
    pub timing: bool,
    /// Score straight lines toward the goal instead of a checkpoint.
    #[arg(long, conflicts_with = "ckpt")]
    pub straight_line: bool,
}

#[derive(Args, Debug)]
pub struct SimArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub world: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub episodes: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Directory for per-episode pose and plan CSVs.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Results CSV written by `dtg eval`.
    pub results: Option<PathBuf>,
    /// Directory for SVG output (default: beside the input).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Trace directory written by `dtg sim --trace`; needs --world.
    #[arg(long, requires = "world")]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub world: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum ConfigCmd {
    /// Print every default as a complete config file.
    Defaults,
}

fn kind_of(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<dtg_core::Error>() {
            return e.kind();
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return "io";
        }
    }
    "invalid-input"
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("dtg: error[usage]: {first}");
            return ExitCode::from(2);
        }
    };
    match commands::dispatch(cli.command, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dtg: error[{}]: {}", kind_of(&e), format!("{e:#}").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
