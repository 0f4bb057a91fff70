//! Subject-specific calibration of the virtual links and tracking evaluation.

mod cost;
mod dataset;
pub mod lm;
mod tracking;

pub use cost::{
    check_inputs, residuals, residuals_penalized, term_names, CostOptions, RedundantChannel, ResidualEval,
    WeightVector, WEIGHT_MAX,
};
pub use dataset::{CalibrationDataset, Phase, ReferenceAngles};
pub use lm::{LmOptions, LmOutcome};
pub use tracking::{evaluate_tracking, pooled_report, track_frames, Condition, TrackingReport};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{DigitKind, DigitModel, KinematicsError, VirtualLinks};
use crate::seeds;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibError {
    #[error("calibration phase {0} has no samples")]
    EmptyPhase(u8),
    #[error("phase {phase} sample {index}: {reason}")]
    BadFrame { phase: u8, index: usize, reason: String },
    #[error("weight vector has {got} entries, the digit needs {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("model is for {model} but the data is for {data}")]
    DigitMismatch { model: DigitKind, data: DigitKind },
    #[error("phase {phase} sample {index}: {source}")]
    Infeasible { phase: u8, index: usize, source: KinematicsError },
    #[error("no multi-start produced a solvable frame in both phases")]
    NoFeasibleStart,
    #[error("{what}: {left} vs {right} samples")]
    LengthMismatch { what: &'static str, left: usize, right: usize },
    #[error("no tracking frame could be solved")]
    NoFeasibleFrames,
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationOptions {
    /// Number of starts including the unperturbed initial guess.
    pub n_starts: usize,
    /// Uniform relative jitter of the extra starts.
    pub jitter: f64,
    /// Box bounds as a fraction of each initial coordinate's magnitude.
    pub bound_frac: f64,
    /// Starts within this relative distance of the best cost are tied; the earliest wins.
    pub tie_tol: f64,
    /// Costs at or below this count as an exact fit and tie with each other.
    pub exact_fit_cost: f64,
    pub seed: u64,
    pub lm: LmOptions,
    pub cost: CostOptions,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            n_starts: 8,
            jitter: 0.2,
            bound_frac: 0.5,
            tie_tol: 1e-10,
            exact_fit_cost: 1e-20,
            seed: 0,
            lm: LmOptions::default(),
            cost: CostOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub virt: VirtualLinks,
    pub final_cost: f64,
    pub term_rms: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub restarts_used: usize,
    /// Index of the winning start (0 = the initial guess itself).
    pub best_start: usize,
    pub infeasible_frames: usize,
    pub history: Vec<f64>,
}

/// Box bounds `center ± frac·|center|` per coordinate.
pub fn bounds(center: &VirtualLinks, frac: f64) -> (Vec<f64>, Vec<f64>) {
    center.as_slice().iter().map(|c| (c - frac * c.abs(), c + frac * c.abs())).unzip()
}

fn start_points(init: &VirtualLinks, opts: &CalibrationOptions, lower: &[f64], upper: &[f64]) -> Vec<Vec<f64>> {
    let mut starts = vec![init.as_slice().to_vec()];
    for s in 1..opts.n_starts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(opts.seed, s as u64));
        let x = init
            .as_slice()
            .iter()
            .zip(lower.iter().zip(upper))
            .map(|(v, (lo, hi))| {
                let f: f64 = rng.gen_range(1.0 - opts.jitter..=1.0 + opts.jitter);
                (v * f).clamp(*lo, *hi)
            })
            .collect();
        starts.push(x);
    }
    starts
}

/// Minimises the weighted calibration cost from several starts around `init`.
pub fn calibrate(
    model: &DigitModel,
    dataset: &CalibrationDataset,
    weights: &WeightVector,
    init: &VirtualLinks,
    opts: &CalibrationOptions,
) -> Result<CalibrationResult, CalibError> {
    check_inputs(model, dataset, weights, &opts.cost)?;
    init.check_digit(dataset.digit)?;
    let (lower, upper) = bounds(init, opts.bound_frac);
    let starts = start_points(init, opts, &lower, &upper);
    let n1 = dataset.phase1.len();
    let n2 = dataset.phase2.len();

    let eval = |x: &[f64]| -> ResidualEval {
        let v = VirtualLinks::from_slice(x).expect("dimension fixed by init");
        residuals_penalized(model, &v, dataset, weights, &opts.cost)
    };
    let f = |x: &[f64]| eval(x).residuals;

    let outcomes: Vec<Option<LmOutcome>> = starts
        .par_iter()
        .map(|x0| {
            let probe = eval(x0);
            let bad1 = probe.infeasible.iter().filter(|(p, _)| *p == Phase::FlatHand).count();
            let bad2 = probe.infeasible.len() - bad1;
            if bad1 == n1 || bad2 == n2 {
                return None;
            }
            Some(lm::minimize(&f, x0, &lower, &upper, &opts.lm))
        })
        .collect();

    let best_cost = outcomes.iter().flatten().map(|o| o.cost).fold(f64::INFINITY, f64::min);
    if !best_cost.is_finite() {
        return Err(CalibError::NoFeasibleStart);
    }
    let (best_start, best) = outcomes
        .iter()
        .enumerate()
        .find_map(|(i, o)| {
            o.as_ref()
                .filter(|o| o.cost <= best_cost * (1.0 + opts.tie_tol) || o.cost <= opts.exact_fit_cost)
                .map(|o| (i, o))
        })
        .expect("a finite best cost exists");

    let virt = VirtualLinks::from_slice(&best.x)?;
    let fin = eval(&best.x);
    Ok(CalibrationResult {
        virt,
        final_cost: fin.cost,
        term_rms: fin.term_rms,
        iterations: best.iterations,
        converged: best.converged,
        restarts_used: starts.len(),
        best_start,
        infeasible_frames: fin.infeasible.len(),
        history: best.history.clone(),
    })
}
