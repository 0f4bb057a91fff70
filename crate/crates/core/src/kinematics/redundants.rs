use std::f64::consts::{FRAC_PI_2, TAU};

use super::types::{DigitKind, JointEstimate};
use super::KinematicsError;
use crate::angles::wrap_two_pi;

/// Predicted readings of the redundant sensors, each in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Redundants {
    pub delta1: f64,
    pub delta2: Option<f64>,
    pub delta3: Option<f64>,
}

/// Predicts the redundant sensor angles from a solved frame.
///
/// `delta2` is produced for every digit (the thumb can opt into it in the cost);
/// `delta3` only for the thumb.
pub fn predict_redundants(
    digit: DigitKind,
    solved: &JointEstimate,
    alpha2: f64,
) -> Result<Redundants, KinematicsError> {
    let s = solved;
    let delta1 = wrap_two_pi(TAU + s.theta1 + s.beta1 - alpha2 - s.beta3);
    let delta2 = wrap_two_pi(TAU - s.beta4 - (FRAC_PI_2 - s.beta5));
    let delta3 = if digit.is_thumb() {
        let g3 = s.gamma3.ok_or(KinematicsError::MissingIntermediate("gamma3"))?;
        let g1 = s.gamma1.ok_or(KinematicsError::MissingIntermediate("gamma1"))?;
        Some(wrap_two_pi(TAU - s.beta4 - (FRAC_PI_2 - s.beta6) - g3 - (FRAC_PI_2 - g1)))
    } else {
        None
    };
    Ok(Redundants { delta1, delta2: Some(delta2), delta3 })
}
