use std::collections::BTreeMap;

use exocal_core::calibration::RedundantChannel;
use exocal_core::kinematics::DigitKind;
use exocal_core::simulator::{
    simulate_session, JointSample, ProtocolConfig, SyntheticSubject, TrajectoryKind, DEFAULT_NOISE_DEG,
};
use serde::{Deserialize, Serialize};

use super::{check_hand_length, sim_error, Globals};
use crate::error::CliError;
use crate::files::{read_json, write_json, DigitProfile, Profile, ProfileSource, PROFILE_VERSION};
use crate::schema::{write_sensor_log, write_truth, GroundTruth, SensorLog, PHASE_TRACKING};

pub const TRUTH_PROFILE: &str = "truth_profile.json";

/// Synthetic session settings; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub subject_id: String,
    pub hand_length_cm: f64,
    pub hand_width_cm: Option<f64>,
    /// Donning perturbation magnitude (percent).
    pub donning_pct: f64,
    pub noise_deg: f64,
    pub digits: Vec<DigitKind>,
    pub protocol: ProtocolConfig,
    /// Redundant channel written to the thumb log's last sensor column.
    pub thumb_second_redundant: RedundantChannel,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            subject_id: "S01".into(),
            hand_length_cm: 18.0,
            hand_width_cm: None,
            donning_pct: 10.0,
            noise_deg: DEFAULT_NOISE_DEG,
            digits: DigitKind::ALL.to_vec(),
            protocol: ProtocolConfig::default(),
            thumb_second_redundant: RedundantChannel::Delta3,
        }
    }
}

/// File stem of a recording: `<digit>_<trajectory>`.
pub fn recording_stem(digit: DigitKind, kind: TrajectoryKind) -> String {
    format!("{digit}_{kind}")
}

pub fn run_simulate(g: &Globals) -> Result<(), CliError> {
    let cfg: SimulationConfig = match &g.config {
        Some(p) => read_json(p)?,
        None => SimulationConfig::default(),
    };
    check_hand_length(cfg.hand_length_cm)?;
    if cfg.digits.is_empty() {
        return Err(CliError::Invalid("digits must list at least one digit".into()));
    }
    if cfg.thumb_second_redundant == RedundantChannel::Delta1 {
        return Err(CliError::Invalid("thumb_second_redundant must be delta2 or delta3".into()));
    }
    let geometry = g.geometry()?;
    let seed = g.seed_or_default();
    let scale = geometry.hand_scale(cfg.hand_length_cm);
    g.prepare_out()?;
    let mut manifest = g.manifest("simulate");
    manifest.seed = Some(seed);
    let mut truth_digits = BTreeMap::new();

    for &digit in &cfg.digits {
        let model = geometry.model(digit).map_err(|e| CliError::Invalid(e.to_string()))?;
        let nominal = geometry.nominal_virt(digit).map_err(|e| CliError::Invalid(e.to_string()))?;
        let subject = SyntheticSubject::new(&model, &nominal, scale, cfg.donning_pct, cfg.noise_deg.to_radians(), seed)
            .map_err(sim_error)?;
        let session = simulate_session(&subject, &cfg.protocol).map_err(sim_error)?;
        let second = if digit.is_thumb() { cfg.thumb_second_redundant } else { RedundantChannel::Delta2 };

        let mut emit = |kind: TrajectoryKind, phase: u8, frames: &[_], truth: &[JointSample]| -> Result<(), CliError> {
            let stem = recording_stem(digit, kind);
            let log_path = g.out.join(format!("{stem}.csv"));
            let truth_path = g.out.join(format!("{stem}_truth.csv"));
            let log = SensorLog { digit, second, frames: frames.to_vec(), phases: vec![phase; frames.len()] };
            write_sensor_log(&log_path, &log)?;
            write_truth(&truth_path, &GroundTruth { digit, samples: truth.to_vec() })?;
            manifest.outputs.push(log_path);
            manifest.outputs.push(truth_path);
            Ok(())
        };
        emit(TrajectoryKind::FlatHand, 1, &session.calibration.phase1, &session.phase1_truth)?;
        emit(TrajectoryKind::McpFlexion, 2, &session.calibration.phase2, &session.phase2_truth)?;
        for task in &session.tasks {
            emit(task.kind, PHASE_TRACKING, &task.frames, &task.truth)?;
        }
        truth_digits.insert(digit, DigitProfile::from_model(&subject.model, &subject.virt_true));
    }

    let profile = Profile {
        version: PROFILE_VERSION,
        subject_id: cfg.subject_id.clone(),
        hand_length_cm: cfg.hand_length_cm,
        hand_width_cm: cfg.hand_width_cm,
        source: ProfileSource::Truth,
        digits: truth_digits,
    };
    let truth_path = g.out.join(TRUTH_PROFILE);
    write_json(&truth_path, &profile)?;
    manifest.outputs.push(truth_path);
    manifest.write(&g.out)?;
    Ok(())
}
