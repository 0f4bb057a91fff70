use std::collections::BTreeMap;
use std::path::PathBuf;

use exocal_core::calibration::{
    calibrate, term_names, CalibError, CalibrationDataset, CalibrationOptions, RedundantChannel, WeightVector,
};
use exocal_core::kinematics::{DigitKind, SensorFrame};
use serde::{Deserialize, Serialize};

use super::{calib_error, check_hand_length, Globals};
use crate::error::CliError;
use crate::files::{
    read_json, write_json, DigitProfile, OptimizerInfo, Profile, ProfileSource, WeightsFile, PROFILE_VERSION,
};
use crate::schema::{read_sensor_log, SensorLog};

pub const PROFILE_NAME: &str = "profile.json";

#[derive(Debug, Clone, Default)]
pub struct CalibrateArgs {
    pub data: Vec<PathBuf>,
    /// `"even"` or a weights JSON path.
    pub weights: String,
    pub hand_length_cm: Option<f64>,
    pub hand_width_cm: Option<f64>,
    pub subject_id: Option<String>,
}

/// Optional optimizer overrides read from `--config`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrateConfig {
    pub n_starts: Option<usize>,
    pub jitter: Option<f64>,
    pub bound_frac: Option<f64>,
    pub max_iter: Option<usize>,
    pub finger_phase2_redundant: Option<RedundantChannel>,
}

impl CalibrateConfig {
    pub fn options(&self, seed: u64) -> CalibrationOptions {
        let mut o = CalibrationOptions { seed, ..Default::default() };
        if let Some(n) = self.n_starts {
            o.n_starts = n;
        }
        if let Some(j) = self.jitter {
            o.jitter = j;
        }
        if let Some(b) = self.bound_frac {
            o.bound_frac = b;
        }
        if let Some(m) = self.max_iter {
            o.lm.max_iter = m;
        }
        if let Some(c) = self.finger_phase2_redundant {
            o.cost.finger_phase2_redundant = c;
        }
        o
    }
}

/// Calibration frames of one digit gathered from one or more logs.
pub struct DigitData {
    pub second: RedundantChannel,
    pub phase1: Vec<SensorFrame>,
    pub phase2: Vec<SensorFrame>,
}

/// Groups the phase 1 and 2 rows of several logs by digit.
pub fn gather_logs(logs: &[(PathBuf, SensorLog)]) -> Result<BTreeMap<DigitKind, DigitData>, CliError> {
    let mut out: BTreeMap<DigitKind, DigitData> = BTreeMap::new();
    for (path, log) in logs {
        let entry =
            out.entry(log.digit).or_insert_with(|| DigitData { second: log.second, phase1: vec![], phase2: vec![] });
        if entry.second != log.second {
            return Err(CliError::config(path, format!("{} logs disagree on the redundant column", log.digit)));
        }
        entry.phase1.extend(log.phase_frames(1));
        entry.phase2.extend(log.phase_frames(2));
    }
    Ok(out)
}

/// Builds a validated calibration dataset; a missing phase is reported explicitly.
pub fn dataset_for(digit: DigitKind, data: &DigitData) -> Result<CalibrationDataset, CliError> {
    CalibrationDataset::new(digit, data.phase1.clone(), data.phase2.clone()).map_err(|e| match e {
        CalibError::EmptyPhase(p) => CliError::Invalid(format!(
            "{digit}: calibration phase {p} is missing ({} data)",
            if p == 1 { "flat-hand" } else { "MCP-flexion" }
        )),
        other => CliError::Invalid(format!("{digit}: {other}")),
    })
}

pub fn run_calibrate(g: &Globals, args: &CalibrateArgs) -> Result<(), CliError> {
    if args.data.is_empty() {
        return Err(CliError::Usage("calibrate needs at least one --data log".into()));
    }
    let cfg: CalibrateConfig = match &g.config {
        Some(p) => read_json(p)?,
        None => CalibrateConfig::default(),
    };
    let geometry = g.geometry()?;
    let seed = g.seed_or_default();
    let hand_length = args.hand_length_cm.unwrap_or(geometry.reference_hand_length_cm);
    check_hand_length(hand_length)?;
    let scale = geometry.hand_scale(hand_length);

    let logs = args.data.iter().map(|p| Ok((p.clone(), read_sensor_log(p)?))).collect::<Result<Vec<_>, CliError>>()?;
    let grouped = gather_logs(&logs)?;
    let weights_file = match args.weights.as_str() {
        "even" => None,
        p => Some((PathBuf::from(p), WeightsFile::read(&PathBuf::from(p))?)),
    };

    let mut manifest = g.manifest("calibrate");
    manifest.seed = Some(seed);
    manifest.inputs.extend(args.data.iter().cloned());
    if let Some((p, _)) = &weights_file {
        manifest.inputs.push(p.clone());
    }

    let mut digits = BTreeMap::new();
    for (&digit, data) in &grouped {
        let weights = match &weights_file {
            None => WeightVector::even(digit),
            Some((p, w)) => w.for_digit(p, digit)?,
        };
        let dataset = dataset_for(digit, data)?;
        let model = geometry.model(digit).map_err(|e| CliError::Invalid(e.to_string()))?.with_hand_scale(scale);
        let init = geometry.nominal_virt(digit).map_err(|e| CliError::Invalid(e.to_string()))?.scaled(scale);
        let mut opts = cfg.options(seed);
        if digit.is_thumb() {
            opts.cost.thumb_second_redundant = data.second;
        }
        let res = calibrate(&model, &dataset, &weights, &init, &opts).map_err(calib_error)?;
        let mut dp = DigitProfile::from_model(&model, &res.virt);
        dp.weights = Some(weights.as_slice().to_vec());
        dp.optimizer = Some(OptimizerInfo::from_result(&res, term_names(digit, &opts.cost), seed));
        digits.insert(digit, dp);
    }

    g.prepare_out()?;
    let profile = Profile {
        version: PROFILE_VERSION,
        subject_id: args.subject_id.clone().unwrap_or_else(|| "subject".into()),
        hand_length_cm: hand_length,
        hand_width_cm: args.hand_width_cm,
        source: ProfileSource::Calibrated,
        digits,
    };
    let path = g.out.join(PROFILE_NAME);
    write_json(&path, &profile)?;
    manifest.outputs.push(path);
    manifest.write(&g.out)?;
    Ok(())
}
