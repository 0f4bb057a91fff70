use super::types::{DigitKind, FingertipPose, JointEstimate};
use super::KinematicsError;

/// Default DIP/PIP coupling ratio.
pub const DEFAULT_DIP_RATIO: f64 = 2.0 / 3.0;

const NEG_EPS: f64 = 1e-9;

/// DIP flexion from PIP flexion with the default coupling ratio.
pub fn dip_from_pip(pip: f64) -> Result<f64, KinematicsError> {
    dip_from_pip_ratio(pip, DEFAULT_DIP_RATIO)
}

pub fn dip_from_pip_ratio(pip: f64, ratio: f64) -> Result<f64, KinematicsError> {
    if pip < -NEG_EPS {
        return Err(KinematicsError::NegativeFlexion(pip));
    }
    Ok(ratio * pip)
}

/// Tip of a planar serial chain given relative joint angles; flexion points toward `-y`.
pub fn chain_tip(lengths: &[f64], relative: &[f64]) -> FingertipPose {
    let mut acc = 0.0;
    let (mut x, mut y) = (0.0, 0.0);
    for (l, q) in lengths.iter().zip(relative) {
        acc += q;
        x += l * acc.cos();
        y -= l * acc.sin();
    }
    FingertipPose { x, y }
}

/// Relative joint angles of the three-segment chain for a digit.
pub fn chain_angles(digit: DigitKind, joints: &JointEstimate) -> Result<[f64; 3], KinematicsError> {
    let third = if digit.is_thumb() {
        joints.theta3.ok_or(KinematicsError::MissingIntermediate("theta3"))?
    } else {
        joints.dip.ok_or(KinematicsError::MissingIntermediate("dip"))?
    };
    Ok([joints.theta1, joints.theta2, third])
}

/// Fingertip position of a digit in its planar frame.
pub fn fingertip_fk(
    digit: DigitKind,
    joints: &JointEstimate,
    phalanges: &[f64],
) -> Result<FingertipPose, KinematicsError> {
    if phalanges.len() != 3 {
        return Err(KinematicsError::BadPhalanxCount(phalanges.len()));
    }
    if !phalanges.iter().all(|l| *l > 0.0) {
        return Err(KinematicsError::InvalidGeometry("phalanx lengths must be positive".into()));
    }
    Ok(chain_tip(phalanges, &chain_angles(digit, joints)?))
}
