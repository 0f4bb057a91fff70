//! Random search over calibration cost weights scored by tracking error.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::{
    calibrate, pooled_report, CalibError, CalibrationDataset, CalibrationOptions, WeightVector, WEIGHT_MAX,
};
use crate::kinematics::{DigitKind, DigitModel, SensorFrame, VirtualLinks};
use crate::simulator::JointSample;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error("invalid search config: {0}")]
    Config(String),
    #[error("no subjects given")]
    NoSubjects,
    #[error("subject {0}: every candidate failed")]
    AllCandidatesFailed(String),
    #[error("subject {id}: {source}")]
    Subject { id: String, source: CalibError },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSearchConfig {
    #[serde(default = "default_candidates")]
    pub n_candidates: usize,
    #[serde(default = "default_range")]
    pub range: [f64; 2],
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub include_even: bool,
}

fn default_candidates() -> usize {
    500
}
fn default_range() -> [f64; 2] {
    [0.0, WEIGHT_MAX]
}
fn default_true() -> bool {
    true
}

impl Default for WeightSearchConfig {
    fn default() -> Self {
        WeightSearchConfig { n_candidates: default_candidates(), range: default_range(), seed: 0, include_even: true }
    }
}

impl WeightSearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        let [lo, hi] = self.range;
        if self.n_candidates == 0 {
            return Err(SearchError::Config("n_candidates must be at least 1".into()));
        }
        if !(lo >= 0.0 && hi <= WEIGHT_MAX && hi > lo) {
            return Err(SearchError::Config(format!("range [{lo}, {hi}] must satisfy 0 <= lo < hi <= {WEIGHT_MAX}")));
        }
        Ok(())
    }
}

/// Candidate weight vectors: the even vector first (when enabled), then i.i.d. uniform draws.
pub fn sample_weights(config: &WeightSearchConfig, digit: DigitKind) -> Result<Vec<WeightVector>, SearchError> {
    config.validate()?;
    let [lo, hi] = config.range;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = Vec::with_capacity(config.n_candidates + 1);
    if config.include_even {
        out.push(WeightVector::even(digit));
    }
    while out.len() < config.n_candidates + usize::from(config.include_even) {
        let w: Vec<f64> = (0..digit.n_params()).map(|_| rng.gen_range(lo..hi)).collect();
        if let Ok(w) = WeightVector::new(w) {
            out.push(w);
        }
    }
    Ok(out)
}

/// Calibration data and evaluation recordings of one subject for one digit.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectData {
    pub id: String,
    /// Model with the subject's phalanges.
    pub model: DigitModel,
    /// Initial guess and bound center for calibration.
    pub init: VirtualLinks,
    pub calibration: CalibrationDataset,
    pub tasks: Vec<(Vec<SensorFrame>, Vec<JointSample>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateScore {
    pub index: usize,
    /// Mean joint MAE (radians); `+∞` when calibration or tracking failed.
    pub score: f64,
    pub joint_mae: Vec<f64>,
    pub tip_mae_mm: f64,
}

/// Calibrates with `weights` and returns the tracking error on the subject's tasks.
pub fn score_candidate(
    weights: &WeightVector,
    subject: &SubjectData,
    opts: &CalibrationOptions,
) -> Result<CandidateScore, CalibError> {
    let res = calibrate(&subject.model, &subject.calibration, weights, &subject.init, opts)?;
    let recs: Vec<(&[SensorFrame], &[JointSample])> =
        subject.tasks.iter().map(|(f, t)| (f.as_slice(), t.as_slice())).collect();
    let rep = pooled_report(&subject.model, &res.virt, &recs, None)?;
    Ok(CandidateScore { index: 0, score: rep.mean_joint_mae(), joint_mae: rep.joint_mae, tip_mae_mm: rep.tip_mae_mm })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectBest {
    pub id: String,
    pub best_index: usize,
    pub weights: WeightVector,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSearchOutcome {
    pub digit: DigitKind,
    pub candidates: Vec<WeightVector>,
    /// `table[s][c]` is candidate `c` scored on subject `s`.
    pub table: Vec<Vec<CandidateScore>>,
    pub per_subject: Vec<SubjectBest>,
    /// Coordinatewise mean of the per-subject best weights.
    pub averaged: Vec<f64>,
}

/// Index of the smallest score; the lowest index wins ties.
pub fn argmin_score(scores: &[CandidateScore]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        if !s.score.is_finite() {
            continue;
        }
        if best.is_none_or(|b| s.score < scores[b].score) {
            best = Some(i);
        }
    }
    best
}

/// Coordinatewise mean of equally sized weight vectors.
pub fn average_weights(bests: &[&WeightVector], dim: usize) -> Vec<f64> {
    let n = bests.len() as f64;
    (0..dim).map(|k| bests.iter().map(|w| w.as_slice()[k]).sum::<f64>() / n).collect()
}

/// Scores one shared candidate list on every subject and averages the winners.
pub fn search(
    subjects: &[SubjectData],
    config: &WeightSearchConfig,
    opts: &CalibrationOptions,
) -> Result<WeightSearchOutcome, SearchError> {
    let first = subjects.first().ok_or(SearchError::NoSubjects)?;
    let digit = first.model.digit;
    if let Some(s) = subjects.iter().find(|s| s.model.digit != digit) {
        return Err(SearchError::Config(format!("subject {} is for {}, expected {digit}", s.id, s.model.digit)));
    }
    let candidates = sample_weights(config, digit)?;
    search_with_candidates(subjects, candidates, opts)
}

/// Like [`search`] with an explicit candidate list.
pub fn search_with_candidates(
    subjects: &[SubjectData],
    candidates: Vec<WeightVector>,
    opts: &CalibrationOptions,
) -> Result<WeightSearchOutcome, SearchError> {
    let first = subjects.first().ok_or(SearchError::NoSubjects)?;
    let digit = first.model.digit;
    let mut table = Vec::with_capacity(subjects.len());
    let mut per_subject = Vec::with_capacity(subjects.len());
    for s in subjects {
        let scores: Vec<CandidateScore> = candidates
            .par_iter()
            .enumerate()
            .map(|(i, w)| match score_candidate(w, s, opts) {
                Ok(c) => CandidateScore { index: i, ..c },
                Err(_) => {
                    CandidateScore { index: i, score: f64::INFINITY, joint_mae: vec![], tip_mae_mm: f64::INFINITY }
                }
            })
            .collect();
        let b = argmin_score(&scores).ok_or_else(|| SearchError::AllCandidatesFailed(s.id.clone()))?;
        per_subject.push(SubjectBest {
            id: s.id.clone(),
            best_index: b,
            weights: candidates[b].clone(),
            score: scores[b].score,
        });
        table.push(scores);
    }
    let bests: Vec<&WeightVector> = per_subject.iter().map(|b| &b.weights).collect();
    let averaged = average_weights(&bests, digit.n_params());
    Ok(WeightSearchOutcome { digit, candidates, table, per_subject, averaged })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn candidates_are_deterministic_and_sized() {
        let cfg = WeightSearchConfig { n_candidates: 20, seed: 7, ..Default::default() };
        let a = sample_weights(&cfg, DigitKind::Thumb).unwrap();
        let b = sample_weights(&cfg, DigitKind::Thumb).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 21);
        assert!(a.iter().all(|w| w.len() == 8));
        assert_eq!(a[0], WeightVector::even(DigitKind::Thumb));
        assert!(a.iter().flat_map(|w| w.as_slice()).all(|v| (0.0..=10.0).contains(v)));
    }

    #[test]
    fn argmin_prefers_lowest_index_on_ties() {
        let s = |i, v| CandidateScore { index: i, score: v, joint_mae: vec![], tip_mae_mm: 0.0 };
        let scores = [s(0, 2.0), s(1, 1.0), s(2, 1.0), s(3, f64::INFINITY)];
        assert_eq!(argmin_score(&scores), Some(1));
        assert_eq!(argmin_score(&[s(0, f64::INFINITY)]), None);
    }

    #[test]
    fn averages_coordinatewise() {
        let a = WeightVector::new(vec![2.0; 6]).unwrap();
        let b = WeightVector::new(vec![4.0; 6]).unwrap();
        assert_eq!(average_weights(&[&a, &b], 6), vec![3.0; 6]);
    }

    #[test]
    fn bad_range_rejected() {
        let cfg = WeightSearchConfig { range: [-1.0, 5.0], ..Default::default() };
        assert!(sample_weights(&cfg, DigitKind::Index).is_err());
    }
}
