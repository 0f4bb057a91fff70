use std::path::{Path, PathBuf};

use exocal_core::kinematics::{DigitModel, SensorFrame, VirtualLinks};

use super::{load_profile, Globals};
use crate::error::CliError;
use crate::schema::{read_sensor_log, write_track, TrackLog, TrackRow};

#[derive(Debug, Clone, Default)]
pub struct TrackArgs {
    /// `"nominal"` or a profile JSON path.
    pub profile: String,
    pub logs: Vec<PathBuf>,
    /// Hand length used to scale the nominal profile.
    pub hand_length_cm: Option<f64>,
}

/// Joint angles (degrees) and fingertip (mm) for every frame; unsolvable frames stay empty.
pub fn track_rows(model: &DigitModel, virt: &VirtualLinks, frames: &[SensorFrame]) -> Vec<TrackRow> {
    frames
        .iter()
        .map(|f| match model.solve(virt, f) {
            Ok(est) => {
                let q = model.joints_of(&est);
                let chain = model.chain_from_joints(&q);
                let tip = model.tip_from_joints(&q);
                TrackRow {
                    t: f.t,
                    joints: Some([q[0].to_degrees(), q[1].to_degrees(), chain[2].to_degrees()]),
                    tip: Some([tip.x, tip.y]),
                }
            }
            Err(_) => TrackRow { t: f.t, joints: None, tip: None },
        })
        .collect()
}

/// Output name for a tracked log: `<stem>_track.csv`.
pub fn track_output_name(log: &Path) -> String {
    let stem = log.file_stem().and_then(|s| s.to_str()).unwrap_or("log");
    format!("{stem}_track.csv")
}

pub fn run_track(g: &Globals, args: &TrackArgs) -> Result<(), CliError> {
    if args.logs.is_empty() {
        return Err(CliError::Usage("track needs at least one --log".into()));
    }
    let geometry = g.geometry()?;
    let (profile, profile_path) = load_profile(&args.profile, &geometry, args.hand_length_cm)?;
    let mut manifest = g.manifest("track");
    manifest.inputs.extend(profile_path);
    g.prepare_out()?;
    for log_path in &args.logs {
        let log = read_sensor_log(log_path)?;
        let (model, virt) = profile.digit_model(&geometry, log.digit)?;
        let rows = track_rows(&model, &virt, &log.frames);
        let bad = rows.iter().filter(|r| r.joints.is_none()).count();
        if bad > 0 {
            eprintln!(
                "{}: {bad} of {} frames could not be solved (flagged feasible=0)",
                log_path.display(),
                rows.len()
            );
        }
        let out = g.out.join(track_output_name(log_path));
        write_track(&out, &TrackLog { digit: log.digit, rows })?;
        manifest.inputs.push(log_path.clone());
        manifest.outputs.push(out);
    }
    manifest.write(&g.out)?;
    Ok(())
}
