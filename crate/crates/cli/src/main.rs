//! `viewdistill` command-line entry point.
//!
//! Exit codes: 0 success, 2 input or configuration error, 3 numeric failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<viewdistill::Error> for CliError {
    fn from(e: viewdistill::Error) -> Self {
        match e {
            viewdistill::Error::NonFinite(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "viewdistill", version, about = "View ranking, curriculum distillation and grounding evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rank the views of a take at every second and write a ranking cache.
    Rank(RankArgs),
    /// Print the curriculum phase lengths and boundaries.
    Schedule(ScheduleArgs),
    /// Train a projection head on one or more takes.
    TrainDistill(TrainArgs),
    /// Score grounding predictions, overall and per view-quality bucket.
    EvalGround(EvalArgs),
    /// Generate a synthetic take with its visibility ground truth.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// Exo calibration file.
    #[arg(long)]
    pub calib: Option<PathBuf>,
    /// Ego trajectory file.
    #[arg(long)]
    pub traj: Option<PathBuf>,
    /// Ranking cache to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Distance from the ego camera to the interaction centre, meters.
    #[arg(long)]
    pub d_ego_hand: Option<f64>,
    /// Camera axis that points along the gaze: +z or -z.
    #[arg(long)]
    pub gaze_axis: Option<String>,
    /// Reverse the exo order at every second.
    #[arg(long)]
    pub reverse: bool,
    /// Shuffle the exo order at every second (seeded by --seed).
    #[arg(long)]
    pub random: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Visibility CSV to correlate the ranking against.
    #[arg(long)]
    pub visibility: Option<PathBuf>,
    /// key=value file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    /// Total epochs.
    pub epochs: usize,
    /// Number of phases.
    pub phases: usize,
    /// Fraction of epochs given to the final phase.
    pub final_frac: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Take directory; repeat for several takes.
    #[arg(long, required = true)]
    pub features: Vec<PathBuf>,
    /// Ranking cache per take, in the same order as --features.
    #[arg(long, required = true)]
    pub rankings: Vec<PathBuf>,
    /// Held-out take directories for the metrics timeline.
    #[arg(long)]
    pub eval_features: Vec<PathBuf>,
    #[arg(long)]
    pub eval_rankings: Vec<PathBuf>,
    /// Output directory for head.vdph and metrics.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Curriculum phases; defaults to the largest view count.
    #[arg(long)]
    pub phases: Option<usize>,
    #[arg(long)]
    pub final_frac: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Prediction file as `VIEW=PATH` (or `PATH` for the ego view); repeatable.
    #[arg(long, required = true)]
    pub predictions: Vec<String>,
    /// Ground-truth keystep annotations.
    #[arg(long)]
    pub keysteps: Option<PathBuf>,
    /// Ranking cache used to bucket views into best/middle/worst.
    #[arg(long)]
    pub rankings: Option<PathBuf>,
    /// Output directory for report.json and report.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated IoU thresholds in (0, 1].
    #[arg(long)]
    pub thresholds: Option<String>,
    /// Recall@K.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Take directory to create.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_exo: Option<usize>,
    /// Seconds.
    #[arg(long)]
    pub duration: Option<u32>,
    /// static, orbit or random-walk.
    #[arg(long)]
    pub ego_path: Option<String>,
    #[arg(long)]
    pub d_ego_hand: Option<f64>,
    /// Feature dimension.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub nuisance: Option<f64>,
    #[arg(long)]
    pub body_radius: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VIEWDISTILL_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Rank(a) => commands::rank(a),
        Command::Schedule(a) => commands::schedule(a),
        Command::TrainDistill(a) => commands::train_distill(a),
        Command::EvalGround(a) => commands::eval_ground(a),
        Command::Simulate(a) => commands::simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
