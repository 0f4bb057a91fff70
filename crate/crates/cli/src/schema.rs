//! Versioned CSV formats: sensor logs, ground truth and tracking output.
//!
//! Every file starts with a `# exocal <kind> v<N> digit=<digit>` line followed by
//! the column header. Readers reject other kinds and versions.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use exocal_core::calibration::RedundantChannel;
use exocal_core::kinematics::{DigitKind, SensorFrame};
use exocal_core::simulator::JointSample;

use crate::error::CliError;

pub const SENSOR_LOG: &str = "sensor-log";
pub const GROUND_TRUTH: &str = "ground-truth";
pub const TRACK: &str = "track";
pub const SCHEMA_VERSION: u32 = 1;

/// Phase column value of tracking recordings.
pub const PHASE_TRACKING: u8 = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct SensorLog {
    pub digit: DigitKind,
    /// Channel stored in the second redundant column.
    pub second: RedundantChannel,
    pub frames: Vec<SensorFrame>,
    pub phases: Vec<u8>,
}

impl SensorLog {
    pub fn phase_frames(&self, phase: u8) -> Vec<SensorFrame> {
        self.frames.iter().zip(&self.phases).filter(|(_, p)| **p == phase).map(|(f, _)| *f).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub digit: DigitKind,
    pub samples: Vec<JointSample>,
}

/// One row of tracking output; joint fields are `None` for unsolvable frames.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackRow {
    pub t: f64,
    /// `[θ1, θ2, θ3 or DIP]` in degrees.
    pub joints: Option<[f64; 3]>,
    pub tip: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackLog {
    pub digit: DigitKind,
    pub rows: Vec<TrackRow>,
}

fn preamble(kind: &str, digit: DigitKind) -> String {
    format!("# exocal {kind} v{SCHEMA_VERSION} digit={digit}")
}

pub fn sensor_header(digit: DigitKind, second: RedundantChannel) -> Vec<String> {
    let mut h = vec!["t_s", "alpha2_deg", "beta2_deg"];
    if digit.is_thumb() {
        h.push("gamma2_deg");
    }
    h.push("delta1_deg");
    h.push(match second {
        RedundantChannel::Delta3 => "delta3_deg",
        _ => "delta2_deg",
    });
    h.push("phase");
    h.into_iter().map(String::from).collect()
}

pub fn truth_header(digit: DigitKind) -> Vec<String> {
    let mut h = vec!["t_s", "theta1_deg", "theta2_deg"];
    if digit.is_thumb() {
        h.push("theta3_deg");
    }
    h.into_iter().map(String::from).collect()
}

pub fn track_header(digit: DigitKind) -> Vec<String> {
    let mut h = vec!["t_s", "theta1_deg", "theta2_deg"];
    h.push(if digit.is_thumb() { "theta3_deg" } else { "dip_deg" });
    h.extend(["tip_x_mm", "tip_y_mm", "feasible"]);
    h.into_iter().map(String::from).collect()
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn write_table(
    path: &Path,
    kind: &str,
    digit: DigitKind,
    header: &[String],
    rows: &[Vec<String>],
) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| CliError::io(path, e);
    writeln!(out, "{}", preamble(kind, digit)).map_err(io)?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header).map_err(|e| CliError::csv(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

pub fn write_sensor_log(path: &Path, log: &SensorLog) -> Result<(), CliError> {
    let header = sensor_header(log.digit, log.second);
    let rows = log
        .frames
        .iter()
        .zip(&log.phases)
        .map(|(f, p)| {
            let second = match log.second {
                RedundantChannel::Delta3 => f.delta3,
                _ => f.delta2,
            };
            let mut r = vec![num(f.t), num(f.alpha2.to_degrees()), num(f.beta2.to_degrees())];
            if log.digit.is_thumb() {
                r.push(num(f.gamma2.unwrap_or(f64::NAN).to_degrees()));
            }
            r.push(num(f.delta1.to_degrees()));
            r.push(num(second.unwrap_or(f64::NAN).to_degrees()));
            r.push(p.to_string());
            r
        })
        .collect::<Vec<_>>();
    write_table(path, SENSOR_LOG, log.digit, &header, &rows)
}

pub fn write_truth(path: &Path, truth: &GroundTruth) -> Result<(), CliError> {
    let n = truth_header(truth.digit).len() - 1;
    let rows = truth
        .samples
        .iter()
        .map(|s| {
            let mut r = vec![num(s.t)];
            r.extend(s.joints[..n].iter().map(|q| num(q.to_degrees())));
            r
        })
        .collect::<Vec<_>>();
    write_table(path, GROUND_TRUTH, truth.digit, &truth_header(truth.digit), &rows)
}

pub fn write_track(path: &Path, log: &TrackLog) -> Result<(), CliError> {
    let rows = log
        .rows
        .iter()
        .map(|row| {
            let mut r = vec![num(row.t)];
            match (row.joints, row.tip) {
                (Some(j), Some(tip)) => {
                    r.extend(j.iter().map(|v| num(*v)));
                    r.extend(tip.iter().map(|v| num(*v)));
                    r.push("1".into());
                }
                _ => {
                    r.extend(std::iter::repeat_n(String::new(), 5));
                    r.push("0".into());
                }
            }
            r
        })
        .collect::<Vec<_>>();
    write_table(path, TRACK, log.digit, &track_header(log.digit), &rows)
}

/// Parses the preamble line; returns the digit.
fn parse_preamble(path: &Path, line: &str, kind: &str) -> Result<DigitKind, CliError> {
    let bad = |msg: String| CliError::schema(path, 1, msg);
    let rest = line
        .strip_prefix("# exocal ")
        .ok_or_else(|| bad(format!("missing '# exocal {kind} v{SCHEMA_VERSION} digit=...' preamble")))?;
    let mut parts = rest.split_whitespace();
    let found_kind = parts.next().unwrap_or_default();
    if found_kind != kind {
        return Err(bad(format!("expected a {kind} file, found '{found_kind}'")));
    }
    let version = parts.next().unwrap_or_default();
    let v: u32 = version
        .strip_prefix('v')
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| bad(format!("malformed version tag '{version}'")))?;
    if v != SCHEMA_VERSION {
        return Err(bad(format!("unsupported {kind} schema version {v} (this build reads v{SCHEMA_VERSION})")));
    }
    let digit = parts
        .next()
        .and_then(|d| d.strip_prefix("digit="))
        .ok_or_else(|| bad("missing digit=<thumb|index|middle>".into()))?;
    digit.parse().map_err(bad)
}

struct Table {
    digit: DigitKind,
    header: Vec<String>,
    rows: Vec<(usize, csv::StringRecord)>,
}

fn read_table(path: &Path, kind: &str) -> Result<Table, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(|e| CliError::io(path, e))?;
    let digit = parse_preamble(path, first.trim_end(), kind)?;
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = r.headers().map_err(|e| CliError::csv(path, e))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::csv(path, e))?;
        // Preamble and header occupy lines 1 and 2.
        rows.push((i + 3, rec));
    }
    Ok(Table { digit, header, rows })
}

fn field(path: &Path, line: usize, rec: &csv::StringRecord, idx: usize, name: &str) -> Result<f64, CliError> {
    let s = rec.get(idx).ok_or_else(|| CliError::schema(path, line, format!("missing column {name}")))?;
    let v: f64 =
        s.trim().parse().map_err(|_| CliError::schema(path, line, format!("column {name}: '{s}' is not a number")))?;
    if !v.is_finite() {
        return Err(CliError::schema(path, line, format!("column {name} is not finite")));
    }
    Ok(v)
}

fn expect_header(path: &Path, found: &[String], expected: &[String]) -> Result<(), CliError> {
    if found != expected {
        return Err(CliError::schema(
            path,
            2,
            format!("header '{}' does not match expected '{}'", found.join(","), expected.join(",")),
        ));
    }
    Ok(())
}

pub fn read_sensor_log(path: &Path) -> Result<SensorLog, CliError> {
    let t = read_table(path, SENSOR_LOG)?;
    let second = if t.digit.is_thumb() && t.header.iter().any(|h| h == "delta3_deg") {
        RedundantChannel::Delta3
    } else {
        RedundantChannel::Delta2
    };
    let header = sensor_header(t.digit, second);
    expect_header(path, &t.header, &header)?;
    let thumb = t.digit.is_thumb();
    let mut frames = Vec::with_capacity(t.rows.len());
    let mut phases = Vec::with_capacity(t.rows.len());
    for (line, rec) in &t.rows {
        let g = |i: usize| field(path, *line, rec, i, &header[i]);
        let mut c = 3;
        let gamma2 = if thumb {
            c += 1;
            Some(g(3)?.to_radians())
        } else {
            None
        };
        let delta1 = g(c)?.to_radians();
        let second_val = g(c + 1)?.to_radians();
        let phase_str = rec.get(c + 2).unwrap_or_default().trim();
        let phase: u8 = match phase_str {
            "0" | "1" | "2" => phase_str.parse().unwrap(),
            other => return Err(CliError::schema(path, *line, format!("phase must be 0, 1 or 2, got '{other}'"))),
        };
        let (delta2, delta3) = match second {
            RedundantChannel::Delta3 => (None, Some(second_val)),
            _ => (Some(second_val), None),
        };
        frames.push(SensorFrame {
            t: g(0)?,
            alpha2: g(1)?.to_radians(),
            beta2: g(2)?.to_radians(),
            gamma2,
            delta1,
            delta2,
            delta3,
        });
        phases.push(phase);
    }
    Ok(SensorLog { digit: t.digit, second, frames, phases })
}

pub fn read_truth(path: &Path) -> Result<GroundTruth, CliError> {
    let t = read_table(path, GROUND_TRUTH)?;
    let header = truth_header(t.digit);
    expect_header(path, &t.header, &header)?;
    let mut samples = Vec::with_capacity(t.rows.len());
    for (line, rec) in &t.rows {
        let mut joints = [0.0; 3];
        for (j, q) in joints.iter_mut().enumerate().take(header.len() - 1) {
            *q = field(path, *line, rec, j + 1, &header[j + 1])?.to_radians();
        }
        samples.push(JointSample { t: field(path, *line, rec, 0, "t_s")?, joints });
    }
    Ok(GroundTruth { digit: t.digit, samples })
}

pub fn read_track(path: &Path) -> Result<TrackLog, CliError> {
    let t = read_table(path, TRACK)?;
    let header = track_header(t.digit);
    expect_header(path, &t.header, &header)?;
    let mut rows = Vec::with_capacity(t.rows.len());
    for (line, rec) in &t.rows {
        let tt = field(path, *line, rec, 0, "t_s")?;
        let feasible = rec.get(6).unwrap_or_default().trim();
        let row = match feasible {
            "1" => {
                let g = |i: usize| field(path, *line, rec, i, &header[i]);
                TrackRow { t: tt, joints: Some([g(1)?, g(2)?, g(3)?]), tip: Some([g(4)?, g(5)?]) }
            }
            "0" => TrackRow { t: tt, joints: None, tip: None },
            other => return Err(CliError::schema(path, *line, format!("feasible must be 0 or 1, got '{other}'"))),
        };
        rows.push(row);
    }
    Ok(TrackLog { digit: t.digit, rows })
}
