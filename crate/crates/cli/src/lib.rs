//! Command-line front end: file schemas, subcommands and report generation.

pub mod commands;
pub mod error;
pub mod files;
pub mod schema;
pub mod svg;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use exocal_core::kinematics::DigitKind;

use crate::commands::{CalibrateArgs, Globals, ReportArgs, SensitivityArgs, TrackArgs};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "exocal", version, about = "Hand exoskeleton kinematics, calibration and analysis")]
pub struct Cli {
    /// Seed for every random stream of the run.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Command configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Hardware geometry (JSON); defaults to the bundled nominal geometry.
    #[arg(long, global = true)]
    pub geometry: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a synthetic subject: calibration phases and tracking tasks.
    Simulate,
    /// Calibrate the virtual links from flat-hand and MCP-flexion logs.
    Calibrate(CalibrateCmd),
    /// Estimate joint angles and fingertip positions from sensor logs.
    Track(TrackCmd),
    /// Random search over cost weights across subjects.
    Weights,
    /// Fingertip sensitivity to each virtual-link coordinate.
    Sensitivity(SensitivityCmd),
    /// Compare tracking error across calibration conditions.
    Report(ReportCmd),
}

#[derive(Debug, Args)]
pub struct CalibrateCmd {
    /// Sensor logs holding phase 1 and phase 2 rows.
    #[arg(long, num_args = 1.., required = true)]
    pub data: Vec<PathBuf>,
    /// `even` or a weights JSON file.
    #[arg(long, default_value = "even")]
    pub weights: String,
    #[arg(long)]
    pub hand_length_cm: Option<f64>,
    #[arg(long)]
    pub hand_width_cm: Option<f64>,
    #[arg(long)]
    pub subject_id: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrackCmd {
    /// Profile JSON or `nominal`.
    #[arg(long, default_value = "nominal")]
    pub profile: String,
    #[arg(long, num_args = 1.., required = true)]
    pub log: Vec<PathBuf>,
    /// Hand length for the nominal profile.
    #[arg(long)]
    pub hand_length_cm: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SensitivityCmd {
    #[arg(long, default_value = "index")]
    pub digit: DigitKind,
    /// Perturbations in percent, comma separated.
    #[arg(long, default_value = commands::DEFAULT_GRID, allow_hyphen_values = true)]
    pub grid: String,
    /// Posture grid, e.g. 5x5.
    #[arg(long, default_value = "5x5")]
    pub postures: String,
    /// Perturbation used for the ranking.
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    pub rank_pct: f64,
    /// Also write sensitivity.svg.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Args)]
pub struct ReportCmd {
    /// Ground-truth CSVs, one per recording.
    #[arg(long, num_args = 1.., required = true)]
    pub truth: Vec<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub uncalibrated: Vec<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub even: Vec<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub optimal: Vec<PathBuf>,
    /// Profile whose phalanges define the fingertip (`nominal` by default).
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long)]
    pub hand_length_cm: Option<f64>,
    /// Also write report.svg.
    #[arg(long)]
    pub svg: bool,
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let out = cli.out.ok_or_else(|| CliError::Usage("--out <DIR> is required".into()))?;
    let g = Globals { seed: cli.seed, config: cli.config, out, geometry: cli.geometry };
    match cli.command {
        Command::Simulate => commands::run_simulate(&g),
        Command::Calibrate(c) => commands::run_calibrate(
            &g,
            &CalibrateArgs {
                data: c.data,
                weights: c.weights,
                hand_length_cm: c.hand_length_cm,
                hand_width_cm: c.hand_width_cm,
                subject_id: c.subject_id,
            },
        ),
        Command::Track(c) => {
            commands::run_track(&g, &TrackArgs { profile: c.profile, logs: c.log, hand_length_cm: c.hand_length_cm })
        }
        Command::Weights => commands::run_weights(&g),
        Command::Sensitivity(c) => commands::run_sensitivity(
            &g,
            &SensitivityArgs { digit: c.digit, grid: c.grid, postures: c.postures, rank_pct: c.rank_pct, svg: c.svg },
        ),
        Command::Report(c) => commands::run_report(
            &g,
            &ReportArgs {
                truth: c.truth,
                uncalibrated: c.uncalibrated,
                even: c.even,
                optimal: c.optimal,
                profile: c.profile,
                hand_length_cm: c.hand_length_cm,
                svg: c.svg,
            },
        ),
    }
}
