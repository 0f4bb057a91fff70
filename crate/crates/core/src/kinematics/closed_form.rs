//! Closed-form loop solutions mapping exoskeleton sensor angles to joint angles.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::types::{DigitKind, FixedGeometry, VirtualLinks};
use super::KinematicsError;
use crate::angles::wrap_pi;

/// Tolerance for clamping inverse-trig arguments that overshoot `[-1, 1]` by round-off.
pub const CLAMP_EPS: f64 = 1e-9;

const DEGENERATE_EPS: f64 = 1e-12;

/// Selects between the loop-consistent closed forms and the expressions as typeset
/// in the original loop table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableForm {
    #[default]
    LoopConsistent,
    AsPrinted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProximalSolution {
    pub theta1: f64,
    pub d1: f64,
    pub alpha3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntermediateSolution {
    pub theta2: f64,
    pub c2: f64,
    pub beta1: f64,
    pub beta3: f64,
    pub beta4: f64,
    pub beta5: f64,
    pub beta6: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistalSolution {
    pub theta3: f64,
    pub gamma3: f64,
    pub gamma5: f64,
    pub gamma1: f64,
    pub gamma6: f64,
}

fn infeasible(stage: &'static str, detail: String) -> KinematicsError {
    KinematicsError::InfeasibleLoop { stage, detail }
}

fn checked_unit(arg: f64, stage: &'static str, what: &str) -> Result<f64, KinematicsError> {
    if !arg.is_finite() {
        return Err(infeasible(stage, format!("{what} argument is not finite")));
    }
    if arg.abs() > 1.0 + CLAMP_EPS {
        return Err(infeasible(stage, format!("{what} argument {arg:.12} outside [-1, 1]")));
    }
    Ok(arg.clamp(-1.0, 1.0))
}

fn acos_checked(arg: f64, stage: &'static str, what: &str) -> Result<f64, KinematicsError> {
    checked_unit(arg, stage, what).map(f64::acos)
}

/// Triangle angle opposite side `opp` given `opp·sin(known)/diag`, taking the obtuse
/// branch when `opp² > adj² + diag²`.
fn asin_opposite(
    opp: f64,
    adj: f64,
    diag: f64,
    sin_known: f64,
    stage: &'static str,
    what: &str,
) -> Result<f64, KinematicsError> {
    let a = checked_unit(opp * sin_known / diag, stage, what)?.asin();
    if opp * opp > adj * adj + diag * diag {
        Ok(PI - a)
    } else {
        Ok(a)
    }
}

/// Proximal RRPR loop: sensor `alpha2` to MCP (thumb: CMC) flexion.
pub fn solve_proximal(
    geom: &FixedGeometry,
    virt: &VirtualLinks,
    alpha2: f64,
) -> Result<ProximalSolution, KinematicsError> {
    solve_proximal_with(geom, virt, alpha2, TableForm::LoopConsistent)
}

pub fn solve_proximal_with(
    geom: &FixedGeometry,
    virt: &VirtualLinks,
    alpha2: f64,
    form: TableForm,
) -> Result<ProximalSolution, KinematicsError> {
    let b1 = geom.b1;
    let c1 = virt.c1();
    let a1 = virt.x1().hypot(virt.y1());
    let alpha1 = virt.y1().atan2(virt.x1());
    let arg = a1 * a1 + b1 * b1 - c1 * c1 + 2.0 * a1 * b1 * (alpha2 - alpha1).cos();
    if arg < -CLAMP_EPS {
        return Err(infeasible("proximal", format!("d1 squared is negative ({arg:.6})")));
    }
    let d1 = arg.max(0.0).sqrt();

    let alpha3 = match form {
        TableForm::LoopConsistent => {
            let px = a1 * alpha1.cos() + b1 * alpha2.cos();
            let py = a1 * alpha1.sin() + b1 * alpha2.sin();
            let num = py + c1;
            let den = px + d1;
            if num.abs() < DEGENERATE_EPS && den.abs() < DEGENERATE_EPS {
                return Err(KinematicsError::DegenerateConfiguration);
            }
            wrap_pi(2.0 * num.atan2(den)) + PI
        }
        TableForm::AsPrinted => {
            let (ca1, sa1) = (alpha1.cos(), alpha1.sin());
            let ca2 = alpha2.cos();
            let num = b1 - 2.0 * d1
                + 2.0 * a1 * ca2 * ca1
                + 2.0 * (b1 - d1) * ca2
                + 2.0 * a1 * ca1
                + b1 * (2.0 * alpha2).cos();
            let den = (2.0 * ca2 + 1.0) * (-c1 + a1 * sa1 + b1 * alpha2.sin());
            if num.abs() < DEGENERATE_EPS && den.abs() < DEGENERATE_EPS {
                return Err(KinematicsError::DegenerateConfiguration);
            }
            -2.0 * num.atan2(den)
        }
    };
    Ok(ProximalSolution { theta1: wrap_pi(-PI + alpha3), d1, alpha3 })
}

/// Intermediate RRRR loop: sensor `beta2` and slider extension `d1` to PIP (thumb: MCP) flexion.
pub fn solve_intermediate(
    geom: &FixedGeometry,
    virt: &VirtualLinks,
    beta2: f64,
    d1: f64,
) -> Result<IntermediateSolution, KinematicsError> {
    solve_intermediate_with(geom, virt, beta2, d1, TableForm::LoopConsistent)
}

pub fn solve_intermediate_with(
    geom: &FixedGeometry,
    virt: &VirtualLinks,
    beta2: f64,
    d1: f64,
    form: TableForm,
) -> Result<IntermediateSolution, KinematicsError> {
    const STAGE: &str = "intermediate";
    let (a2, d2) = (geom.a2, geom.d2);
    let c1 = virt.c1();
    let l1 = virt.l1();
    let b2 = virt.x3().hypot(virt.y3());
    let beta6 = virt.y3().atan2(virt.x3());

    let c2 = c1.hypot(l1 - d1);
    let beta1 = c1.atan2(l1 - d1);
    let e_sq = a2 * a2 + d2 * d2 - 2.0 * a2 * d2 * beta2.cos();
    if e_sq <= DEGENERATE_EPS {
        return Err(KinematicsError::DegenerateConfiguration);
    }
    let e = e_sq.sqrt();
    let sin_b2 = beta2.sin();

    let beta5_core = acos_checked((e_sq - b2 * b2 - c2 * c2) / (-2.0 * b2 * c2), STAGE, "beta5")?;

    let (beta3, beta4, beta5) = match form {
        TableForm::LoopConsistent => {
            let beta5 = beta5_core;
            let beta3 = asin_opposite(a2, d2, e, sin_b2, STAGE, "beta3 (Q side)")?
                + asin_opposite(b2, c2, e, beta5.sin(), STAGE, "beta3 (J side)")?;
            let beta4 = acos_checked(
                (c2 * c2 + d2 * d2 - (a2 * a2 + b2 * b2) - 2.0 * c2 * d2 * beta3.cos()) / (-2.0 * a2 * b2),
                STAGE,
                "beta4",
            )?;
            // Reflex at R: the interior angles must still sum to 2π.
            let beta4 = if beta2 + beta3 + beta5 < PI { 2.0 * PI - beta4 } else { beta4 };
            (beta3, beta4, beta5)
        }
        TableForm::AsPrinted => {
            let beta3 = checked_unit(a2 * sin_b2 / e, STAGE, "beta3")?.asin();
            let f = (b2 * b2 + c2 * c2 - 2.0 * b2 * c2 * beta6.cos()).sqrt();
            let beta5 = beta5_core + checked_unit(b2 * beta6.sin() / f, STAGE, "beta5")?.asin();
            let beta4 = acos_checked(
                (c2 * c2 + d2 * d2 - (a2 * a2 + b2 * b2) - 2.0 * c2 * d2 * beta2.cos()) / (-2.0 * a2 * b2),
                STAGE,
                "beta4",
            )?;
            (beta3, beta4, beta5)
        }
    };

    let theta2 = wrap_pi(beta1 + beta5 + beta6 - PI);
    Ok(IntermediateSolution { theta2, c2, beta1, beta3, beta4, beta5, beta6 })
}

/// Distal RRRR loop of the thumb: sensor `gamma2` to IP flexion.
pub fn solve_distal(
    digit: DigitKind,
    geom: &FixedGeometry,
    virt: &VirtualLinks,
    gamma2: f64,
) -> Result<DistalSolution, KinematicsError> {
    solve_distal_with(digit, geom, virt, gamma2, TableForm::LoopConsistent)
}

pub fn solve_distal_with(
    digit: DigitKind,
    geom: &FixedGeometry,
    virt: &VirtualLinks,
    gamma2: f64,
    form: TableForm,
) -> Result<DistalSolution, KinematicsError> {
    const STAGE: &str = "distal";
    if !digit.is_thumb() {
        return Err(KinematicsError::WrongDigit);
    }
    let dist = geom.distal()?;
    let (x4, y4) = match (virt.x4(), virt.y4()) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(KinematicsError::MissingIntermediate("x4/y4")),
    };
    let (a3, c3, d3, gamma1) = (dist.a3, dist.c3, dist.d3, dist.gamma1);
    let b3 = x4.hypot(y4);
    let gamma6 = y4.atan2(x4);

    let e_sq = a3 * a3 + d3 * d3 - 2.0 * a3 * d3 * gamma2.cos();
    if e_sq <= DEGENERATE_EPS {
        return Err(KinematicsError::DegenerateConfiguration);
    }
    let e = e_sq.sqrt();
    let gamma5 = acos_checked(
        (a3 * a3 + d3 * d3 - (b3 * b3 + c3 * c3) - 2.0 * a3 * d3 * gamma2.cos()) / (-2.0 * b3 * c3),
        STAGE,
        "gamma5",
    )?;
    let f = (b3 * b3 + c3 * c3 - 2.0 * b3 * c3 * gamma5.cos()).sqrt();
    let gamma3 = match form {
        TableForm::LoopConsistent => {
            asin_opposite(a3, d3, e, gamma2.sin(), STAGE, "gamma3 (S side)")?
                + asin_opposite(b3, c3, f, gamma5.sin(), STAGE, "gamma3 (U side)")?
        }
        TableForm::AsPrinted => {
            checked_unit(a3 * gamma2.sin() / e, STAGE, "gamma3")?.asin()
                + checked_unit(b3 * gamma5.sin() / f, STAGE, "gamma3")?.asin()
        }
    };
    let theta3 = wrap_pi(gamma1 + gamma5 + gamma6 - PI);
    Ok(DistalSolution { theta3, gamma3, gamma5, gamma1, gamma6 })
}
