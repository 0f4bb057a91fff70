//! Residual-weighted calibration cost.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::dataset::{CalibrationDataset, Phase};
use super::CalibError;
use crate::angles::wrap_pi;
use crate::kinematics::{DigitKind, DigitModel, Redundants, SensorFrame, VirtualLinks};

pub const WEIGHT_MAX: f64 = 10.0;

/// Which redundant channel feeds a redundant-angle term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RedundantChannel {
    Delta1,
    Delta2,
    Delta3,
}

impl RedundantChannel {
    pub fn as_str(self) -> &'static str {
        match self {
            RedundantChannel::Delta1 => "delta1",
            RedundantChannel::Delta2 => "delta2",
            RedundantChannel::Delta3 => "delta3",
        }
    }

    fn measured(self, f: &SensorFrame) -> Option<f64> {
        match self {
            RedundantChannel::Delta1 => Some(f.delta1),
            RedundantChannel::Delta2 => f.delta2,
            RedundantChannel::Delta3 => f.delta3,
        }
    }

    fn predicted(self, r: &Redundants) -> Option<f64> {
        match self {
            RedundantChannel::Delta1 => Some(r.delta1),
            RedundantChannel::Delta2 => r.delta2,
            RedundantChannel::Delta3 => r.delta3,
        }
    }
}

/// Switches for the redundant terms of the cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostOptions {
    /// Redundant channel of the last finger term (phase 2).
    pub finger_phase2_redundant: RedundantChannel,
    /// Second redundant channel of the thumb terms.
    pub thumb_second_redundant: RedundantChannel,
}

impl Default for CostOptions {
    fn default() -> Self {
        CostOptions {
            finger_phase2_redundant: RedundantChannel::Delta1,
            thumb_second_redundant: RedundantChannel::Delta3,
        }
    }
}

impl CostOptions {
    /// Second redundant channel recorded for a digit.
    pub fn second_channel(&self, digit: DigitKind) -> RedundantChannel {
        if digit.is_thumb() {
            self.thumb_second_redundant
        } else {
            RedundantChannel::Delta2
        }
    }
}

/// Non-negative per-term weights, one per virtual-link coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self, CalibError> {
        if w.iter().any(|v| !(0.0..=WEIGHT_MAX).contains(v)) {
            return Err(CalibError::InvalidWeights(format!("weights must lie in [0, {WEIGHT_MAX}]: {w:?}")));
        }
        if w.iter().all(|v| *v == 0.0) {
            return Err(CalibError::InvalidWeights("weights must not all be zero".into()));
        }
        Ok(WeightVector(w))
    }

    /// All-ones weights for a digit.
    pub fn even(digit: DigitKind) -> Self {
        WeightVector(vec![1.0; digit.n_params()])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check_digit(&self, digit: DigitKind) -> Result<(), CalibError> {
        if self.0.len() != digit.n_params() {
            return Err(CalibError::DimensionMismatch { expected: digit.n_params(), got: self.0.len() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Quantity {
    Theta(usize, f64),
    Redundant(RedundantChannel),
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Term {
    phase: Phase,
    quantity: Quantity,
}

/// Human-readable names of the cost terms, in weight order.
pub fn term_names(digit: DigitKind, opts: &CostOptions) -> Vec<String> {
    terms(digit, &super::ReferenceAngles::for_digit(digit), opts)
        .iter()
        .map(|t| {
            let q = match t.quantity {
                Quantity::Theta(j, _) => format!("theta{}", j + 1),
                Quantity::Redundant(c) => c.as_str().to_string(),
            };
            let p = match t.phase {
                Phase::FlatHand => "phase1",
                Phase::McpFlexion => "phase2",
            };
            format!("{q}_{p}")
        })
        .collect()
}

fn terms(digit: DigitKind, refs: &super::ReferenceAngles, opts: &CostOptions) -> Vec<Term> {
    use Phase::*;
    use Quantity::*;
    let t = |phase, quantity| Term { phase, quantity };
    let r = refs.phase1;
    let c = refs.phase2_constrained;
    if digit.is_thumb() {
        let second = opts.thumb_second_redundant;
        vec![
            t(FlatHand, Theta(0, r[0])),
            t(FlatHand, Theta(1, r[1])),
            t(FlatHand, Theta(2, r[2])),
            t(FlatHand, Redundant(RedundantChannel::Delta1)),
            t(FlatHand, Redundant(second)),
            t(McpFlexion, Theta(2, c)),
            t(McpFlexion, Redundant(RedundantChannel::Delta1)),
            t(McpFlexion, Redundant(second)),
        ]
    } else {
        vec![
            t(FlatHand, Theta(0, r[0])),
            t(FlatHand, Theta(1, r[1])),
            t(FlatHand, Redundant(RedundantChannel::Delta1)),
            t(FlatHand, Redundant(RedundantChannel::Delta2)),
            t(McpFlexion, Theta(1, c)),
            t(McpFlexion, Redundant(opts.finger_phase2_redundant)),
        ]
    }
}

/// Weighted residual vector and the associated cost.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualEval {
    /// `sqrt(w_k / N_phase) · Δ` for every term and sample, term-major.
    pub residuals: Vec<f64>,
    /// Sum of squared residuals, i.e. the weighted cost.
    pub cost: f64,
    /// Unweighted root-mean-square of each term's differences (radians).
    pub term_rms: Vec<f64>,
    /// Frames whose loops could not be solved (phase, index).
    pub infeasible: Vec<(Phase, usize)>,
}

/// Per-frame model output needed by the cost; `None` when the loops do not close.
type Solved = Option<([f64; 3], Redundants)>;

fn solve_phase(model: &DigitModel, virt: &VirtualLinks, frames: &[SensorFrame]) -> Vec<Solved> {
    frames.iter().map(|f| model.solve_with_redundants(virt, f).ok().map(|(e, r)| (model.joints_of(&e), r))).collect()
}

/// Checks dimensions and that every channel referenced by the cost is recorded.
pub fn check_inputs(
    model: &DigitModel,
    dataset: &CalibrationDataset,
    weights: &WeightVector,
    opts: &CostOptions,
) -> Result<(), CalibError> {
    if model.digit != dataset.digit {
        return Err(CalibError::DigitMismatch { model: model.digit, data: dataset.digit });
    }
    weights.check_digit(dataset.digit)?;
    for term in terms(dataset.digit, &dataset.refs, opts) {
        if let Quantity::Redundant(ch) = term.quantity {
            let phase = if term.phase == Phase::FlatHand { 1 } else { 2 };
            if let Some(i) = dataset.frames(term.phase).iter().position(|f| ch.measured(f).is_none()) {
                return Err(CalibError::BadFrame {
                    phase,
                    index: i,
                    reason: format!("missing {} channel", ch.as_str()),
                });
            }
        }
    }
    Ok(())
}

/// Evaluates the weighted residuals; infeasible frames get a residual of π per term.
pub fn residuals_penalized(
    model: &DigitModel,
    virt: &VirtualLinks,
    dataset: &CalibrationDataset,
    weights: &WeightVector,
    opts: &CostOptions,
) -> ResidualEval {
    let solved1 = solve_phase(model, virt, &dataset.phase1);
    let solved2 = solve_phase(model, virt, &dataset.phase2);
    let mut infeasible = Vec::new();
    for (phase, solved) in [(Phase::FlatHand, &solved1), (Phase::McpFlexion, &solved2)] {
        infeasible.extend(solved.iter().enumerate().filter(|(_, s)| s.is_none()).map(|(i, _)| (phase, i)));
    }

    let terms = terms(dataset.digit, &dataset.refs, opts);
    let mut residuals = Vec::with_capacity(terms.len() * dataset.phase1.len().max(dataset.phase2.len()));
    let mut term_rms = Vec::with_capacity(terms.len());
    for (term, &w) in terms.iter().zip(weights.as_slice()) {
        let (frames, solved) = match term.phase {
            Phase::FlatHand => (&dataset.phase1, &solved1),
            Phase::McpFlexion => (&dataset.phase2, &solved2),
        };
        let scale = (w / frames.len() as f64).sqrt();
        let mut sq = 0.0;
        for (f, s) in frames.iter().zip(solved) {
            let delta = match s {
                None => PI,
                Some((joints, red)) => match term.quantity {
                    Quantity::Theta(j, reference) => wrap_pi(joints[j] - reference),
                    Quantity::Redundant(ch) => match (ch.predicted(red), ch.measured(f)) {
                        (Some(p), Some(m)) => wrap_pi(p - m),
                        _ => PI,
                    },
                },
            };
            sq += delta * delta;
            residuals.push(scale * delta);
        }
        term_rms.push((sq / frames.len() as f64).sqrt());
    }
    let cost = residuals.iter().map(|r| r * r).sum();
    ResidualEval { residuals, cost, term_rms, infeasible }
}

/// Weighted residuals that fail on the first infeasible sample.
pub fn residuals(
    model: &DigitModel,
    virt: &VirtualLinks,
    dataset: &CalibrationDataset,
    weights: &WeightVector,
    opts: &CostOptions,
) -> Result<ResidualEval, CalibError> {
    check_inputs(model, dataset, weights, opts)?;
    for (phase_no, frames) in [(1u8, &dataset.phase1), (2u8, &dataset.phase2)] {
        for (i, f) in frames.iter().enumerate() {
            if let Err(source) = model.solve_with_redundants(virt, f) {
                return Err(CalibError::Infeasible { phase: phase_no, index: i, source });
            }
        }
    }
    Ok(residuals_penalized(model, virt, dataset, weights, opts))
}
