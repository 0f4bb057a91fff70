//! One-at-a-time perturbation of virtual-link coordinates and the resulting
//! fingertip deviation.

use rayon::prelude::*;
use thiserror::Error;

use crate::kinematics::{DigitModel, ParamId, SensorFrame, VirtualLinks};
use crate::simulator::{exact_sensors, SimError, THUMB_CMC_REF_DEG};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SensError {
    #[error("perturbation grid must contain 0%")]
    MissingZero,
    #[error("perturbation grid does not contain the reference point {0}%")]
    MissingReference(f64),
    #[error("posture {0} cannot be solved with the nominal geometry")]
    InfeasibleNominal(usize),
    #[error("curves do not share the same perturbation grid")]
    GridMismatch,
    #[error("parameter {0} does not exist for this digit")]
    UnknownParam(ParamId),
    #[error("no postures given")]
    NoPostures,
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub pct: f64,
    /// Largest fingertip displacement over the solvable postures (mm).
    pub deviation_mm: f64,
    /// False when at least one posture could not be solved at this perturbation.
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityCurve {
    pub param: ParamId,
    pub points: Vec<SweepPoint>,
}

impl SensitivityCurve {
    pub fn at(&self, pct: f64) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.pct == pct)
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Joint-space range covered by [`posture_grid`] in degrees: `(first, second)` flexing joints.
pub fn posture_ranges_deg(model: &DigitModel) -> ((f64, f64), (f64, f64)) {
    if model.digit.is_thumb() {
        ((0.0, 50.0), (0.0, 50.0))
    } else {
        ((0.0, 70.0), (0.0, 70.0))
    }
}

/// Sensor readings for an `n_a × n_b` grid of flexion postures.
///
/// Fingers sweep MCP × PIP; the thumb holds CMC at its reference and sweeps MCP × IP.
pub fn posture_grid(
    model: &DigitModel,
    virt: &VirtualLinks,
    n_a: usize,
    n_b: usize,
) -> Result<Vec<SensorFrame>, SensError> {
    let ((a0, a1), (b0, b1)) = posture_ranges_deg(model);
    let mut out = Vec::with_capacity(n_a * n_b);
    for a in linspace(a0, a1, n_a) {
        for b in linspace(b0, b1, n_b) {
            let (a, b) = (a.to_radians(), b.to_radians());
            let joints = if model.digit.is_thumb() { [THUMB_CMC_REF_DEG.to_radians(), a, b] } else { [a, b, 0.0] };
            out.push(exact_sensors(model, virt, &joints, 0.0, out.len())?);
        }
    }
    Ok(out)
}

/// Scales one coordinate over `grid` (percent) and records the worst fingertip shift.
pub fn perturb_sweep(
    model: &DigitModel,
    virt_nominal: &VirtualLinks,
    param: ParamId,
    grid: &[f64],
    postures: &[SensorFrame],
) -> Result<SensitivityCurve, SensError> {
    if !grid.contains(&0.0) {
        return Err(SensError::MissingZero);
    }
    if postures.is_empty() {
        return Err(SensError::NoPostures);
    }
    let base = virt_nominal.get(param).ok_or(SensError::UnknownParam(param))?;
    let nominal_tips = postures
        .iter()
        .enumerate()
        .map(|(i, f)| {
            model
                .solve(virt_nominal, f)
                .map(|e| model.tip_from_joints(&model.joints_of(&e)))
                .map_err(|_| SensError::InfeasibleNominal(i))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let points = grid
        .par_iter()
        .map(|&pct| {
            let v = virt_nominal.with(param, base * (1.0 + pct / 100.0));
            let mut worst: f64 = 0.0;
            let mut feasible = true;
            let mut any = false;
            for (f, tip0) in postures.iter().zip(&nominal_tips) {
                match model.solve(&v, f) {
                    Ok(e) => {
                        any = true;
                        worst = worst.max(model.tip_from_joints(&model.joints_of(&e)).distance(tip0));
                    }
                    Err(_) => feasible = false,
                }
            }
            SweepPoint { pct, deviation_mm: if any { worst } else { f64::NAN }, feasible }
        })
        .collect();
    Ok(SensitivityCurve { param, points })
}

/// Sweeps every coordinate of the digit.
pub fn sweep_all(
    model: &DigitModel,
    virt_nominal: &VirtualLinks,
    grid: &[f64],
    postures: &[SensorFrame],
) -> Result<Vec<SensitivityCurve>, SensError> {
    ParamId::for_digit(model.digit).iter().map(|&p| perturb_sweep(model, virt_nominal, p, grid, postures)).collect()
}

/// Parameters ordered by decreasing deviation at `reference_pct`; ties by name.
pub fn rank_params(curves: &[SensitivityCurve], reference_pct: f64) -> Result<Vec<ParamId>, SensError> {
    let Some(first) = curves.first() else {
        return Ok(vec![]);
    };
    let grid: Vec<f64> = first.points.iter().map(|p| p.pct).collect();
    let mut keyed = Vec::with_capacity(curves.len());
    for c in curves {
        if c.points.len() != grid.len() || c.points.iter().zip(&grid).any(|(p, g)| p.pct != *g) {
            return Err(SensError::GridMismatch);
        }
        let at = c.at(reference_pct).ok_or(SensError::MissingReference(reference_pct))?;
        keyed.push((c.param, at.deviation_mm.abs()));
    }
    keyed.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.name().cmp(b.0.name())));
    Ok(keyed.into_iter().map(|k| k.0).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(p: ParamId, dev: f64) -> SensitivityCurve {
        SensitivityCurve {
            param: p,
            points: vec![
                SweepPoint { pct: 0.0, deviation_mm: 0.0, feasible: true },
                SweepPoint { pct: 10.0, deviation_mm: dev, feasible: true },
            ],
        }
    }

    #[test]
    fn rank_by_deviation() {
        let c = [curve(ParamId::X1, 30.0), curve(ParamId::Y1, 5.0), curve(ParamId::X3, 25.0)];
        assert_eq!(rank_params(&c, 10.0).unwrap(), vec![ParamId::X1, ParamId::X3, ParamId::Y1]);
    }

    #[test]
    fn ties_are_alphabetical() {
        let c = [curve(ParamId::Y3, 1.0), curve(ParamId::X2, 1.0), curve(ParamId::X1, 1.0)];
        assert_eq!(rank_params(&c, 10.0).unwrap(), vec![ParamId::X1, ParamId::X2, ParamId::Y3]);
    }

    #[test]
    fn grid_mismatch_detected() {
        let mut b = curve(ParamId::Y1, 1.0);
        b.points[1].pct = 5.0;
        assert_eq!(rank_params(&[curve(ParamId::X1, 1.0), b], 10.0), Err(SensError::GridMismatch));
    }
}
