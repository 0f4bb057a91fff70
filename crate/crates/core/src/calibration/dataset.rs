use serde::{Deserialize, Serialize};

use super::CalibError;
use crate::kinematics::{DigitKind, SensorFrame};
use crate::simulator::THUMB_CMC_REF_DEG;

/// Known joint angles during the two calibration phases (radians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceAngles {
    /// Flat hand: `[θ1, θ2, θ3]`; all zero except the thumb CMC.
    pub phase1: [f64; 3],
    /// Isolated MCP flexion: the PIP (thumb: IP) joint held extended.
    pub phase2_constrained: f64,
}

impl ReferenceAngles {
    pub fn for_digit(digit: DigitKind) -> Self {
        let cmc = if digit.is_thumb() { THUMB_CMC_REF_DEG.to_radians() } else { 0.0 };
        ReferenceAngles { phase1: [cmc, 0.0, 0.0], phase2_constrained: 0.0 }
    }
}

/// Calibration phase of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    FlatHand,
    McpFlexion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationDataset {
    pub digit: DigitKind,
    pub phase1: Vec<SensorFrame>,
    pub phase2: Vec<SensorFrame>,
    pub refs: ReferenceAngles,
}

fn check_phase(digit: DigitKind, phase: u8, frames: &[SensorFrame]) -> Result<(), CalibError> {
    if frames.is_empty() {
        return Err(CalibError::EmptyPhase(phase));
    }
    for (i, f) in frames.iter().enumerate() {
        if !f.is_finite() {
            return Err(CalibError::BadFrame { phase, index: i, reason: "non-finite value".into() });
        }
        if digit.is_thumb() && f.gamma2.is_none() {
            return Err(CalibError::BadFrame { phase, index: i, reason: "thumb frame without gamma2".into() });
        }
        if i > 0 && f.t < frames[i - 1].t {
            return Err(CalibError::BadFrame { phase, index: i, reason: "time goes backwards".into() });
        }
    }
    Ok(())
}

impl CalibrationDataset {
    pub fn new(digit: DigitKind, phase1: Vec<SensorFrame>, phase2: Vec<SensorFrame>) -> Result<Self, CalibError> {
        check_phase(digit, 1, &phase1)?;
        check_phase(digit, 2, &phase2)?;
        Ok(CalibrationDataset { digit, phase1, phase2, refs: ReferenceAngles::for_digit(digit) })
    }

    pub fn frames(&self, phase: Phase) -> &[SensorFrame] {
        match phase {
            Phase::FlatHand => &self.phase1,
            Phase::McpFlexion => &self.phase2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(t: f64) -> SensorFrame {
        SensorFrame { t, delta2: Some(0.0), ..Default::default() }
    }

    #[test]
    fn empty_phase_two_rejected() {
        let e = CalibrationDataset::new(DigitKind::Index, vec![frame(0.0)], vec![]).unwrap_err();
        assert!(matches!(e, CalibError::EmptyPhase(2)));
    }

    #[test]
    fn backwards_time_rejected() {
        let e = CalibrationDataset::new(DigitKind::Index, vec![frame(1.0), frame(0.5)], vec![frame(0.0)]);
        assert!(matches!(e, Err(CalibError::BadFrame { phase: 1, index: 1, .. })));
    }

    #[test]
    fn thumb_reference_is_seventy_degrees() {
        let r = ReferenceAngles::for_digit(DigitKind::Thumb);
        assert_eq!(r.phase1[0].to_degrees().round(), 70.0);
        assert!((r.phase1[0] - 70f64.to_radians()).abs() < 1e-15);
    }
}
