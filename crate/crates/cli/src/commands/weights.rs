use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use exocal_core::config::HandGeometry;
use exocal_core::kinematics::DigitKind;
use exocal_core::simulator::TrajectoryKind;
use exocal_core::weight_search::{search, SearchError, SubjectData, WeightSearchConfig, WeightSearchOutcome};
use serde::{Deserialize, Serialize};

use super::calibrate::{dataset_for, gather_logs, CalibrateConfig};
use super::simulate::recording_stem;
use super::{check_hand_length, Globals};
use crate::error::CliError;
use crate::files::{read_json, write_json, WeightsFile, WEIGHTS_VERSION};
use crate::schema::{read_sensor_log, read_truth, SCHEMA_VERSION};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectEntry {
    pub id: String,
    /// Directory written by `simulate`, relative to the config file.
    pub dir: PathBuf,
    #[serde(default)]
    pub hand_length_cm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    pub version: u32,
    pub digit: DigitKind,
    #[serde(default = "default_candidates")]
    pub n_candidates: usize,
    #[serde(default = "default_range")]
    pub range: [f64; 2],
    #[serde(default = "default_true")]
    pub include_even: bool,
    #[serde(default)]
    pub calibration: CalibrateConfig,
    pub subjects: Vec<SubjectEntry>,
}

fn default_candidates() -> usize {
    WeightSearchConfig::default().n_candidates
}
fn default_range() -> [f64; 2] {
    WeightSearchConfig::default().range
}
fn default_true() -> bool {
    true
}

fn load_subject(
    geometry: &HandGeometry,
    digit: DigitKind,
    base: &Path,
    entry: &SubjectEntry,
    inputs: &mut Vec<PathBuf>,
) -> Result<(SubjectData, exocal_core::calibration::RedundantChannel), CliError> {
    let dir = base.join(&entry.dir);
    let hand_length = entry.hand_length_cm.unwrap_or(geometry.reference_hand_length_cm);
    check_hand_length(hand_length)?;
    let scale = geometry.hand_scale(hand_length);
    let mut logs = Vec::new();
    for kind in [TrajectoryKind::FlatHand, TrajectoryKind::McpFlexion] {
        let p = dir.join(format!("{}.csv", recording_stem(digit, kind)));
        logs.push((p.clone(), read_sensor_log(&p)?));
        inputs.push(p);
    }
    let grouped = gather_logs(&logs)?;
    let data = grouped
        .get(&digit)
        .ok_or_else(|| CliError::Invalid(format!("subject {}: no {digit} calibration logs", entry.id)))?;
    let calibration = dataset_for(digit, data)?;
    let mut tasks = Vec::new();
    for &kind in TrajectoryKind::tasks_for(digit) {
        let stem = recording_stem(digit, kind);
        let lp = dir.join(format!("{stem}.csv"));
        let tp = dir.join(format!("{stem}_truth.csv"));
        let log = read_sensor_log(&lp)?;
        let truth = read_truth(&tp)?;
        if log.digit != digit || truth.digit != digit {
            return Err(CliError::Invalid(format!("subject {}: {stem} files are not for {digit}", entry.id)));
        }
        if log.frames.len() != truth.samples.len() {
            return Err(CliError::Invalid(format!("subject {}: {stem} log and truth lengths differ", entry.id)));
        }
        tasks.push((log.frames, truth.samples));
        inputs.push(lp);
        inputs.push(tp);
    }
    let model = geometry.model(digit).map_err(|e| CliError::Invalid(e.to_string()))?.with_hand_scale(scale);
    let init = geometry.nominal_virt(digit).map_err(|e| CliError::Invalid(e.to_string()))?.scaled(scale);
    Ok((SubjectData { id: entry.id.clone(), model, init, calibration, tasks }, data.second))
}

fn weight_columns(n: usize) -> Vec<String> {
    (1..=n).map(|k| format!("w{k}")).collect()
}

fn csv_writer(path: &Path, kind: &str, digit: DigitKind) -> Result<csv::Writer<BufWriter<File>>, CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "# exocal {kind} v{SCHEMA_VERSION} digit={digit}").map_err(|e| CliError::io(path, e))?;
    Ok(csv::WriterBuilder::new().has_headers(false).from_writer(out))
}

/// Writes every candidate's score on every subject.
pub fn write_scores(path: &Path, outcome: &WeightSearchOutcome) -> Result<(), CliError> {
    let digit = outcome.digit;
    let mut w = csv_writer(path, "weight-scores", digit)?;
    let err = |e| CliError::csv(path, e);
    let mut header = vec!["subject".to_string(), "candidate".to_string()];
    header.extend(weight_columns(digit.n_params()));
    header.extend(["score_deg".to_string(), "tip_mae_mm".to_string()]);
    w.write_record(&header).map_err(err)?;
    for (best, scores) in outcome.per_subject.iter().zip(&outcome.table) {
        for s in scores {
            let mut rec = vec![best.id.clone(), s.index.to_string()];
            rec.extend(outcome.candidates[s.index].as_slice().iter().map(|v| format!("{v}")));
            rec.push(format!("{}", s.score.to_degrees()));
            rec.push(format!("{}", s.tip_mae_mm));
            w.write_record(&rec).map_err(err)?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Per-subject winning weights followed by their coordinatewise average.
pub fn write_profile(path: &Path, outcome: &WeightSearchOutcome, even_index: Option<usize>) -> Result<(), CliError> {
    let digit = outcome.digit;
    let mut w = csv_writer(path, "weight-profile", digit)?;
    let err = |e| CliError::csv(path, e);
    let mut header = vec!["subject".to_string(), "best_candidate".to_string()];
    header.extend(weight_columns(digit.n_params()));
    header.extend(["score_deg".to_string(), "even_score_deg".to_string()]);
    w.write_record(&header).map_err(err)?;
    for (best, scores) in outcome.per_subject.iter().zip(&outcome.table) {
        let mut rec = vec![best.id.clone(), best.best_index.to_string()];
        rec.extend(best.weights.as_slice().iter().map(|v| format!("{v}")));
        rec.push(format!("{}", best.score.to_degrees()));
        rec.push(even_index.map_or(String::new(), |i| format!("{}", scores[i].score.to_degrees())));
        w.write_record(&rec).map_err(err)?;
    }
    let mut rec = vec!["average".to_string(), String::new()];
    rec.extend(outcome.averaged.iter().map(|v| format!("{v}")));
    rec.extend([String::new(), String::new()]);
    w.write_record(&rec).map_err(err)?;
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn run_weights(g: &Globals) -> Result<(), CliError> {
    let seed =
        g.seed.ok_or_else(|| CliError::Usage("weights requires --seed for a reproducible candidate list".into()))?;
    let cfg_path = g.config.clone().ok_or_else(|| CliError::Usage("weights requires --config".into()))?;
    let cfg: WeightsConfig = read_json(&cfg_path)?;
    if cfg.version != CONFIG_VERSION {
        return Err(CliError::config(&cfg_path, format!("unsupported weights config version {}", cfg.version)));
    }
    if cfg.subjects.is_empty() {
        return Err(CliError::config(&cfg_path, "subjects must not be empty"));
    }
    let geometry = g.geometry()?;
    let base = cfg_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut manifest = g.manifest("weights");
    manifest.inputs.push(cfg_path.clone());

    let mut subjects = Vec::new();
    let mut second = None;
    for entry in &cfg.subjects {
        let (s, ch) = load_subject(&geometry, cfg.digit, &base, entry, &mut manifest.inputs)?;
        if second.is_some_and(|c| c != ch) {
            return Err(CliError::Invalid(format!(
                "subject {}: redundant column differs from other subjects",
                entry.id
            )));
        }
        second = Some(ch);
        subjects.push(s);
    }
    let search_cfg =
        WeightSearchConfig { n_candidates: cfg.n_candidates, range: cfg.range, seed, include_even: cfg.include_even };
    let mut opts = cfg.calibration.options(seed);
    if cfg.digit.is_thumb() {
        opts.cost.thumb_second_redundant = second.expect("at least one subject");
    }
    let outcome = search(&subjects, &search_cfg, &opts).map_err(|e| match e {
        SearchError::AllCandidatesFailed(_) => CliError::Numerical(e.to_string()),
        other => CliError::config(&cfg_path, other.to_string()),
    })?;

    g.prepare_out()?;
    let scores = g.out.join("scores.csv");
    write_scores(&scores, &outcome)?;
    let profile = g.out.join("weight_profile.csv");
    write_profile(&profile, &outcome, cfg.include_even.then_some(0))?;
    let weights = g.out.join("weights.json");
    write_json(
        &weights,
        &WeightsFile { version: WEIGHTS_VERSION, weights: BTreeMap::from([(cfg.digit, outcome.averaged.clone())]) },
    )?;
    manifest.outputs.extend([scores, profile, weights]);
    manifest.write(&g.out)?;
    Ok(())
}
