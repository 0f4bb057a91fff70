//! Subcommand implementations.

mod calibrate;
mod report;
mod sensitivity;
mod simulate;
mod track;
mod weights;

use std::fs;
use std::path::{Path, PathBuf};

use exocal_core::calibration::CalibError;
use exocal_core::config::HandGeometry;
use exocal_core::simulator::SimError;

use crate::error::CliError;
use crate::files::{Profile, RunManifest};

pub use calibrate::{run_calibrate, CalibrateArgs, CalibrateConfig};
pub use report::{run_report, ReportArgs};
pub use sensitivity::{run_sensitivity, SensitivityArgs, DEFAULT_GRID};
pub use simulate::{run_simulate, SimulationConfig};
pub use track::{run_track, TrackArgs};
pub use weights::{run_weights, SubjectEntry, WeightsConfig};

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Globals {
    pub seed: Option<u64>,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub geometry: Option<PathBuf>,
}

impl Globals {
    pub fn geometry(&self) -> Result<HandGeometry, CliError> {
        match &self.geometry {
            None => Ok(HandGeometry::shipped()),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                HandGeometry::from_json_str(&text).map_err(|e| match e {
                    exocal_core::config::ConfigError::Parse(j) => CliError::json(p, j),
                    other => CliError::config(p, other.to_string()),
                })
            }
        }
    }

    pub fn seed_or_default(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn prepare_out(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.out).map_err(|e| CliError::io(&self.out, e))
    }

    pub fn manifest(&self, command: &str) -> RunManifest {
        let mut m = RunManifest::new(command, self.config.as_deref(), self.seed);
        if let Some(g) = &self.geometry {
            m.inputs.push(g.clone());
        }
        m
    }
}

/// Loads a profile path, or the nominal geometry scaled to `hand_length_cm` for `"nominal"`.
pub fn load_profile(
    spec: &str,
    geometry: &HandGeometry,
    hand_length_cm: Option<f64>,
) -> Result<(Profile, Option<PathBuf>), CliError> {
    if spec == "nominal" {
        let len = hand_length_cm.unwrap_or(geometry.reference_hand_length_cm);
        check_hand_length(len)?;
        Ok((Profile::nominal(geometry, "nominal", len)?, None))
    } else {
        let p = PathBuf::from(spec);
        Ok((Profile::read(&p)?, Some(p)))
    }
}

pub fn check_hand_length(len: f64) -> Result<(), CliError> {
    if !(len > 0.0 && len.is_finite()) {
        return Err(CliError::Invalid(format!("hand length must be positive, got {len} cm")));
    }
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn sim_error(e: SimError) -> CliError {
    match e {
        SimError::Unreachable { .. } => CliError::Numerical(e.to_string()),
        other => CliError::Invalid(other.to_string()),
    }
}

pub fn calib_error(e: CalibError) -> CliError {
    match e {
        CalibError::Infeasible { .. }
        | CalibError::NoFeasibleStart
        | CalibError::NoFeasibleFrames
        | CalibError::Kinematics(_) => CliError::Numerical(e.to_string()),
        other => CliError::Invalid(other.to_string()),
    }
}
