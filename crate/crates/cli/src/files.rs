//! JSON artifacts: calibration profiles, weight files and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use exocal_core::calibration::{CalibrationResult, WeightVector};
use exocal_core::config::{HandGeometry, VirtualLinksFile};
use exocal_core::kinematics::{DigitKind, DigitModel, VirtualLinks};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const PROFILE_VERSION: u32 = 1;
pub const WEIGHTS_VERSION: u32 = 1;
pub const MANIFEST_NAME: &str = "manifest.json";

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::json(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSource {
    Calibrated,
    Nominal,
    /// Ground truth written by the simulator.
    Truth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerInfo {
    pub final_cost: f64,
    pub term_names: Vec<String>,
    pub term_rms_deg: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub restarts_used: usize,
    pub best_start: usize,
    pub infeasible_frames: usize,
    pub seed: u64,
}

impl OptimizerInfo {
    pub fn from_result(res: &CalibrationResult, term_names: Vec<String>, seed: u64) -> Self {
        OptimizerInfo {
            final_cost: res.final_cost,
            term_names,
            term_rms_deg: res.term_rms.iter().map(|r| r.to_degrees()).collect(),
            iterations: res.iterations,
            converged: res.converged,
            restarts_used: res.restarts_used,
            best_start: res.best_start,
            infeasible_frames: res.infeasible_frames,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DigitProfile {
    #[serde(rename = "virtual")]
    pub virt: VirtualLinksFile,
    pub phalanges_mm: [f64; 3],
    pub dip_ratio: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerInfo>,
}

/// Subject-specific geometry produced by calibration (or the simulator's truth).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Profile {
    pub version: u32,
    pub subject_id: String,
    pub hand_length_cm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hand_width_cm: Option<f64>,
    pub source: ProfileSource,
    pub digits: BTreeMap<DigitKind, DigitProfile>,
}

impl DigitProfile {
    pub fn from_model(model: &DigitModel, virt: &VirtualLinks) -> Self {
        DigitProfile {
            virt: VirtualLinksFile::from_links(virt),
            phalanges_mm: model.phalanges,
            dip_ratio: model.dip_ratio,
            weights: None,
            optimizer: None,
        }
    }
}

impl Profile {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let p: Profile = read_json(path)?;
        if p.version != PROFILE_VERSION {
            return Err(CliError::config(
                path,
                format!("unsupported profile version {} (this build reads v{PROFILE_VERSION})", p.version),
            ));
        }
        Ok(p)
    }

    /// Nominal geometry scaled to a hand length.
    pub fn nominal(geometry: &HandGeometry, subject_id: &str, hand_length_cm: f64) -> Result<Self, CliError> {
        let scale = geometry.hand_scale(hand_length_cm);
        let mut digits = BTreeMap::new();
        for d in geometry.digits() {
            let model = geometry.model(d).map_err(|e| CliError::Invalid(e.to_string()))?.with_hand_scale(scale);
            let virt = geometry.nominal_virt(d).map_err(|e| CliError::Invalid(e.to_string()))?.scaled(scale);
            digits.insert(d, DigitProfile::from_model(&model, &virt));
        }
        Ok(Profile {
            version: PROFILE_VERSION,
            subject_id: subject_id.to_string(),
            hand_length_cm,
            hand_width_cm: None,
            source: ProfileSource::Nominal,
            digits,
        })
    }

    /// Model and virtual links for one digit: hardware from `geometry`, the rest from the profile.
    pub fn digit_model(
        &self,
        geometry: &HandGeometry,
        digit: DigitKind,
    ) -> Result<(DigitModel, VirtualLinks), CliError> {
        let dp = self
            .digits
            .get(&digit)
            .ok_or_else(|| CliError::Invalid(format!("profile '{}' has no {digit} entry", self.subject_id)))?;
        let mut model = geometry.model(digit).map_err(|e| CliError::Invalid(e.to_string()))?;
        model.phalanges = dp.phalanges_mm;
        model.dip_ratio = dp.dip_ratio;
        model.validate().map_err(|e| CliError::Invalid(format!("{digit}: {e}")))?;
        let virt = dp.virt.to_links().map_err(|e| CliError::Invalid(format!("{digit}: {e}")))?;
        virt.check_digit(digit).map_err(|e| CliError::Invalid(format!("{digit}: {e}")))?;
        Ok((model, virt))
    }
}

/// Weight vectors per digit, as written by the `weights` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsFile {
    pub version: u32,
    pub weights: BTreeMap<DigitKind, Vec<f64>>,
}

impl WeightsFile {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let w: WeightsFile = read_json(path)?;
        if w.version != WEIGHTS_VERSION {
            return Err(CliError::config(
                path,
                format!("unsupported weights version {} (this build reads v{WEIGHTS_VERSION})", w.version),
            ));
        }
        Ok(w)
    }

    pub fn for_digit(&self, path: &Path, digit: DigitKind) -> Result<WeightVector, CliError> {
        let w = self.weights.get(&digit).ok_or_else(|| CliError::config(path, format!("no weights for {digit}")))?;
        let w = WeightVector::new(w.clone()).map_err(|e| CliError::config(path, format!("{digit}: {e}")))?;
        w.check_digit(digit).map_err(|e| CliError::config(path, format!("{digit}: {e}")))?;
        Ok(w)
    }
}

/// Provenance record written next to every command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub timestamp_unix: u64,
}

impl RunManifest {
    pub fn new(command: &str, config_path: Option<&Path>, seed: Option<u64>) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_path: config_path.map(Path::to_path_buf),
            seed,
            inputs: vec![],
            outputs: vec![],
            timestamp_unix: timestamp(),
        }
    }

    /// Writes `manifest.json` into `dir`; output paths are stored relative to it.
    pub fn write(&mut self, dir: &Path) -> Result<PathBuf, CliError> {
        for o in &mut self.outputs {
            if let Ok(rel) = o.strip_prefix(dir) {
                *o = rel.to_path_buf();
            }
        }
        let path = dir.join(MANIFEST_NAME);
        write_json(&path, self)?;
        Ok(path)
    }
}

/// Seconds since the epoch, or `SOURCE_DATE_EPOCH` when set.
fn timestamp() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.trim().parse().ok()) {
        return t;
    }
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}
