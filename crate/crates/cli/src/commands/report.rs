use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use exocal_core::angles::wrap_pi;
use exocal_core::calibration::Condition;
use exocal_core::kinematics::{DigitKind, DigitModel};

use super::{load_profile, write_text, Globals};
use crate::error::CliError;
use crate::schema::{read_track, read_truth, GroundTruth, TrackLog, SCHEMA_VERSION};
use crate::svg;

pub const REPORT_NAME: &str = "report.csv";

#[derive(Debug, Clone, Default)]
pub struct ReportArgs {
    pub truth: Vec<PathBuf>,
    pub uncalibrated: Vec<PathBuf>,
    pub even: Vec<PathBuf>,
    pub optimal: Vec<PathBuf>,
    /// Profile whose phalanges define the fingertip; `"nominal"` when absent.
    pub profile: Option<String>,
    pub hand_length_cm: Option<f64>,
    pub svg: bool,
}

/// Tracking error of one condition pooled over all recordings.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionSummary {
    pub condition: Condition,
    /// Per-joint MAE in degrees.
    pub joint_mae_deg: Vec<f64>,
    pub tip_mae_mm: f64,
    pub frames: usize,
    pub infeasible_frames: usize,
}

impl ConditionSummary {
    pub fn mean_joint_mae_deg(&self) -> f64 {
        self.joint_mae_deg.iter().sum::<f64>() / self.joint_mae_deg.len() as f64
    }
}

/// Percent reduction from `base` to `v`; zero when both are zero.
pub fn reduction_pct(base: f64, v: f64) -> f64 {
    if base == v {
        0.0
    } else {
        100.0 * (base - v) / base
    }
}

/// Pools joint and fingertip MAE of tracked rows against ground truth.
///
/// Fingertips of estimate and truth are both recomputed with `model`.
pub fn summarize(
    condition: Condition,
    model: &DigitModel,
    pairs: &[(&Path, &TrackLog, &GroundTruth)],
) -> Result<ConditionSummary, CliError> {
    let nj = model.n_joints();
    let mut abs = vec![0.0; nj];
    let mut tip = 0.0;
    let (mut n, mut bad) = (0usize, 0usize);
    for (path, track, truth) in pairs {
        if track.digit != truth.digit {
            return Err(CliError::Invalid(format!(
                "{}: tracking is for {} but the ground truth is for {}",
                path.display(),
                track.digit,
                truth.digit
            )));
        }
        if track.rows.len() != truth.samples.len() {
            return Err(CliError::Invalid(format!(
                "{}: {} rows but the ground truth has {} (misaligned inputs)",
                path.display(),
                track.rows.len(),
                truth.samples.len()
            )));
        }
        for (i, (row, gt)) in track.rows.iter().zip(&truth.samples).enumerate() {
            if (row.t - gt.t).abs() > 1e-9 {
                return Err(CliError::schema(
                    path,
                    i + 3,
                    format!("t_s {} does not match ground truth {}", row.t, gt.t),
                ));
            }
            let Some(j) = row.joints else {
                bad += 1;
                continue;
            };
            let q = [j[0].to_radians(), j[1].to_radians(), j[2].to_radians()];
            let q = if model.digit.is_thumb() { q } else { [q[0], q[1], 0.0] };
            for k in 0..nj {
                abs[k] += wrap_pi(q[k] - gt.joints[k]).abs().to_degrees();
            }
            tip += model.tip_from_joints(&q).distance(&model.tip_from_joints(&gt.joints));
            n += 1;
        }
    }
    if n == 0 {
        return Err(CliError::Numerical(format!("{} condition has no solvable frame", condition.as_str())));
    }
    let nf = n as f64;
    Ok(ConditionSummary {
        condition,
        joint_mae_deg: abs.into_iter().map(|s| s / nf).collect(),
        tip_mae_mm: tip / nf,
        frames: n,
        infeasible_frames: bad,
    })
}

fn joint_names(digit: DigitKind) -> Vec<&'static str> {
    if digit.is_thumb() {
        vec!["theta1", "theta2", "theta3"]
    } else {
        vec!["theta1", "theta2"]
    }
}

/// Writes the comparison table; reductions are relative to the first summary.
pub fn write_report(path: &Path, digit: DigitKind, rows: &[ConditionSummary]) -> Result<(), CliError> {
    let io = |e| CliError::io(path, e);
    let file = File::create(path).map_err(io)?;
    let mut out = BufWriter::new(file);
    writeln!(out, "# exocal report v{SCHEMA_VERSION} digit={digit}").map_err(io)?;
    let names = joint_names(digit);
    let mut header = vec!["condition".to_string()];
    header.extend(names.iter().map(|n| format!("{n}_mae_deg")));
    header.extend(["mean_joint_mae_deg", "tip_mae_mm", "frames", "infeasible_frames"].map(String::from));
    header.extend(names.iter().map(|n| format!("{n}_reduction_pct")));
    header.extend(["mean_joint_reduction_pct", "tip_reduction_pct"].map(String::from));
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(&header).map_err(|e| CliError::csv(path, e))?;
    let base = &rows[0];
    for r in rows {
        let mut rec = vec![r.condition.as_str().to_string()];
        rec.extend(r.joint_mae_deg.iter().map(|v| format!("{v}")));
        rec.push(format!("{}", r.mean_joint_mae_deg()));
        rec.push(format!("{}", r.tip_mae_mm));
        rec.push(r.frames.to_string());
        rec.push(r.infeasible_frames.to_string());
        rec.extend(r.joint_mae_deg.iter().zip(&base.joint_mae_deg).map(|(v, b)| format!("{}", reduction_pct(*b, *v))));
        rec.push(format!("{}", reduction_pct(base.mean_joint_mae_deg(), r.mean_joint_mae_deg())));
        rec.push(format!("{}", reduction_pct(base.tip_mae_mm, r.tip_mae_mm)));
        w.write_record(&rec).map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

pub fn run_report(g: &Globals, args: &ReportArgs) -> Result<(), CliError> {
    let conditions: Vec<(Condition, &Vec<PathBuf>)> = [
        (Condition::Uncalibrated, &args.uncalibrated),
        (Condition::Even, &args.even),
        (Condition::Optimal, &args.optimal),
    ]
    .into_iter()
    .filter(|(_, v)| !v.is_empty())
    .collect();
    if conditions.len() < 2 {
        return Err(CliError::Usage("report compares at least two of --uncalibrated, --even, --optimal".into()));
    }
    if args.truth.is_empty() {
        return Err(CliError::Usage("report needs --truth".into()));
    }
    for (c, files) in &conditions {
        if files.len() != args.truth.len() {
            return Err(CliError::Usage(format!(
                "--{} lists {} files but --truth lists {}",
                c.as_str(),
                files.len(),
                args.truth.len()
            )));
        }
    }
    let truths = args.truth.iter().map(|p| read_truth(p)).collect::<Result<Vec<_>, _>>()?;
    let digit = truths[0].digit;
    if let Some((p, t)) = args.truth.iter().zip(&truths).find(|(_, t)| t.digit != digit) {
        return Err(CliError::Invalid(format!("{}: ground truth for {} mixed with {digit}", p.display(), t.digit)));
    }
    let geometry = g.geometry()?;
    let spec = args.profile.as_deref().unwrap_or("nominal");
    let (profile, profile_path) = load_profile(spec, &geometry, args.hand_length_cm)?;
    let (model, _) = profile.digit_model(&geometry, digit)?;

    let mut manifest = g.manifest("report");
    manifest.inputs.extend(profile_path);
    manifest.inputs.extend(args.truth.iter().cloned());
    let mut summaries = Vec::new();
    for (c, files) in &conditions {
        let tracks = files.iter().map(|p| read_track(p)).collect::<Result<Vec<_>, _>>()?;
        let pairs: Vec<_> = files.iter().zip(&tracks).zip(&truths).map(|((p, t), gt)| (p.as_path(), t, gt)).collect();
        summaries.push(summarize(*c, &model, &pairs)?);
        manifest.inputs.extend(files.iter().cloned());
    }

    g.prepare_out()?;
    let path = g.out.join(REPORT_NAME);
    write_report(&path, digit, &summaries)?;
    manifest.outputs.push(path);
    if args.svg {
        let mut cats: Vec<String> = joint_names(digit).iter().map(|n| format!("{n} (deg)")).collect();
        cats.push("fingertip (mm)".into());
        let groups: Vec<(String, Vec<f64>)> = summaries
            .iter()
            .map(|s| {
                let mut v = s.joint_mae_deg.clone();
                v.push(s.tip_mae_mm);
                (s.condition.as_str().to_string(), v)
            })
            .collect();
        let svg_path = g.out.join("report.svg");
        write_text(&svg_path, &svg::bar_chart(&format!("{digit} tracking error"), "MAE", &cats, &groups))?;
        manifest.outputs.push(svg_path);
    }
    manifest.write(&g.out)?;
    Ok(())
}
