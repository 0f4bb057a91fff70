use serde::{Deserialize, Serialize};

use super::CalibError;
use crate::angles::wrap_pi;
use crate::kinematics::{DigitModel, JointEstimate, KinematicsError, SensorFrame, VirtualLinks};
use crate::simulator::JointSample;

/// Which virtual links produced a set of estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Uncalibrated,
    Even,
    Optimal,
}

impl Condition {
    pub const ALL: [Condition; 3] = [Condition::Uncalibrated, Condition::Even, Condition::Optimal];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Uncalibrated => "uncalibrated",
            Condition::Even => "even",
            Condition::Optimal => "optimal",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingReport {
    pub condition: Option<Condition>,
    /// Mean absolute error per anatomical joint (radians): 2 for fingers, 3 for the thumb.
    pub joint_mae: Vec<f64>,
    pub tip_mae_mm: f64,
    /// Frames that entered the averages.
    pub frames: usize,
    /// Frames whose loops could not be solved; excluded from the averages.
    pub infeasible_frames: usize,
}

impl TrackingReport {
    /// Mean of the per-joint errors (radians).
    pub fn mean_joint_mae(&self) -> f64 {
        self.joint_mae.iter().sum::<f64>() / self.joint_mae.len() as f64
    }
}

/// Forward-solves every frame; infeasible frames keep their error.
pub fn track_frames(
    model: &DigitModel,
    virt: &VirtualLinks,
    frames: &[SensorFrame],
) -> Vec<Result<JointEstimate, KinematicsError>> {
    frames.iter().map(|f| model.solve(virt, f)).collect()
}

#[derive(Default)]
struct Accum {
    joint_abs: Vec<f64>,
    tip: f64,
    n: usize,
    bad: usize,
}

impl Accum {
    fn add(&mut self, model: &DigitModel, virt: &VirtualLinks, frames: &[SensorFrame], truth: &[JointSample]) {
        let nj = model.n_joints();
        if self.joint_abs.is_empty() {
            self.joint_abs = vec![0.0; nj];
        }
        for (f, gt) in frames.iter().zip(truth) {
            match model.solve(virt, f) {
                Ok(est) => {
                    let q = model.joints_of(&est);
                    for (acc, (a, b)) in self.joint_abs.iter_mut().zip(q.iter().zip(&gt.joints)) {
                        *acc += wrap_pi(a - b).abs();
                    }
                    self.tip += model.tip_from_joints(&q).distance(&model.tip_from_joints(&gt.joints));
                    self.n += 1;
                }
                Err(_) => self.bad += 1,
            }
        }
    }

    fn finish(self, condition: Option<Condition>) -> Result<TrackingReport, CalibError> {
        if self.n == 0 {
            return Err(CalibError::NoFeasibleFrames);
        }
        let n = self.n as f64;
        Ok(TrackingReport {
            condition,
            joint_mae: self.joint_abs.iter().map(|s| s / n).collect(),
            tip_mae_mm: self.tip / n,
            frames: self.n,
            infeasible_frames: self.bad,
        })
    }
}

/// Joint and fingertip MAE of the model against ground truth.
///
/// Fingertips of both the estimate and the truth use `model.phalanges`.
pub fn evaluate_tracking(
    model: &DigitModel,
    virt: &VirtualLinks,
    frames: &[SensorFrame],
    truth: &[JointSample],
    condition: Option<Condition>,
) -> Result<TrackingReport, CalibError> {
    pooled_report(model, virt, &[(frames, truth)], condition)
}

/// MAE pooled over several recordings.
pub fn pooled_report(
    model: &DigitModel,
    virt: &VirtualLinks,
    recordings: &[(&[SensorFrame], &[JointSample])],
    condition: Option<Condition>,
) -> Result<TrackingReport, CalibError> {
    let mut acc = Accum::default();
    for (frames, truth) in recordings {
        if frames.len() != truth.len() {
            return Err(CalibError::LengthMismatch {
                what: "frames vs ground truth",
                left: frames.len(),
                right: truth.len(),
            });
        }
        acc.add(model, virt, frames, truth);
    }
    acc.finish(condition)
}
