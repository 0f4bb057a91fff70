use super::closed_form::{solve_distal_with, solve_intermediate_with, solve_proximal_with, TableForm};
use super::fingertip::{chain_tip, DEFAULT_DIP_RATIO};
use super::redundants::{predict_redundants, Redundants};
use super::types::{DigitKind, FingertipPose, FixedGeometry, JointEstimate, SensorFrame, VirtualLinks};
use super::KinematicsError;

/// Everything about a digit that is not calibrated: hardware geometry, bone lengths,
/// DIP coupling and which closed-form variant to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DigitModel {
    pub digit: DigitKind,
    pub geom: FixedGeometry,
    pub phalanges: [f64; 3],
    pub dip_ratio: f64,
    pub form: TableForm,
}

impl DigitModel {
    pub fn new(digit: DigitKind, geom: FixedGeometry, phalanges: [f64; 3]) -> Self {
        DigitModel { digit, geom, phalanges, dip_ratio: DEFAULT_DIP_RATIO, form: TableForm::LoopConsistent }
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        self.geom.validate(self.digit)?;
        if !self.phalanges.iter().all(|l| *l > 0.0) {
            return Err(KinematicsError::InvalidGeometry("phalanx lengths must be positive".into()));
        }
        if !(self.dip_ratio >= 0.0 && self.dip_ratio.is_finite()) {
            return Err(KinematicsError::InvalidGeometry("dip ratio must be non-negative".into()));
        }
        Ok(())
    }

    /// Copy with phalanges multiplied by `s`; the hardware is unchanged.
    pub fn with_hand_scale(&self, s: f64) -> Self {
        let mut m = *self;
        for l in &mut m.phalanges {
            *l *= s;
        }
        m
    }

    /// Forward solve of every loop of the digit for one sensor frame.
    pub fn solve(&self, virt: &VirtualLinks, frame: &SensorFrame) -> Result<JointEstimate, KinematicsError> {
        let prox = solve_proximal_with(&self.geom, virt, frame.alpha2, self.form)?;
        let int = solve_intermediate_with(&self.geom, virt, frame.beta2, prox.d1, self.form)?;
        let mut est = JointEstimate {
            theta1: prox.theta1,
            theta2: int.theta2,
            d1: prox.d1,
            alpha3: prox.alpha3,
            c2: int.c2,
            beta1: int.beta1,
            beta3: int.beta3,
            beta4: int.beta4,
            beta5: int.beta5,
            beta6: int.beta6,
            ..Default::default()
        };
        if self.digit.is_thumb() {
            let gamma2 = frame.gamma2.ok_or(KinematicsError::MissingSensor("gamma2"))?;
            let dist = solve_distal_with(self.digit, &self.geom, virt, gamma2, self.form)?;
            est.theta3 = Some(dist.theta3);
            est.gamma1 = Some(dist.gamma1);
            est.gamma3 = Some(dist.gamma3);
            est.gamma5 = Some(dist.gamma5);
        } else {
            est.dip = Some(self.dip_ratio * int.theta2);
        }
        Ok(est)
    }

    /// Forward solve followed by redundant-sensor prediction.
    pub fn solve_with_redundants(
        &self,
        virt: &VirtualLinks,
        frame: &SensorFrame,
    ) -> Result<(JointEstimate, Redundants), KinematicsError> {
        let est = self.solve(virt, frame)?;
        let red = predict_redundants(self.digit, &est, frame.alpha2)?;
        Ok((est, red))
    }

    /// Relative chain angles for anatomical joints `[θ1, θ2, θ3]`; for fingers the
    /// third entry is ignored and replaced by the coupled DIP angle.
    pub fn chain_from_joints(&self, joints: &[f64; 3]) -> [f64; 3] {
        if self.digit.is_thumb() {
            *joints
        } else {
            [joints[0], joints[1], self.dip_ratio * joints[1]]
        }
    }

    pub fn tip_from_joints(&self, joints: &[f64; 3]) -> FingertipPose {
        chain_tip(&self.phalanges, &self.chain_from_joints(joints))
    }

    /// Anatomical joint vector `[θ1, θ2, θ3]` (θ3 = 0 for fingers) of an estimate.
    pub fn joints_of(&self, est: &JointEstimate) -> [f64; 3] {
        [est.theta1, est.theta2, est.theta3.unwrap_or(0.0)]
    }

    /// Number of anatomical joints tracked (2 for fingers, 3 for the thumb).
    pub fn n_joints(&self) -> usize {
        if self.digit.is_thumb() {
            3
        } else {
            2
        }
    }
}
