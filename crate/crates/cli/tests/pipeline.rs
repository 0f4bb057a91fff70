//! End-to-end runs of the `exocal` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SHORT: &str = r#"{"protocol": {"rate_hz": 20.0, "phase1_s": 0.5, "phase2_s": 2.0, "task_s": 2.0}}"#;

fn exocal(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exocal"))
        .args(args)
        .current_dir(dir)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) {
    let out = exocal(dir, args);
    assert!(out.status.success(), "exocal {args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Temp dir holding a short seeded simulation in `sim/`.
fn simulated() -> TempDir {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("short.json"), SHORT).unwrap();
    ok(d.path(), &["simulate", "--seed", "3", "--config", "short.json", "--out", "sim"]);
    d
}

/// Data rows of an exocal CSV, split into cells.
fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().skip(2).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn calib_logs(digits: &[&str]) -> Vec<String> {
    digits.iter().flat_map(|d| [format!("sim/{d}_flat_hand.csv"), format!("sim/{d}_mcp_flexion.csv")]).collect()
}

fn with(prefix: &[&str], rest: &[String]) -> Vec<String> {
    prefix.iter().map(|s| s.to_string()).chain(rest.iter().cloned()).collect()
}

fn run_owned(dir: &Path, args: &[String]) -> Output {
    exocal(dir, &args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn default_simulation_emits_all_recordings() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["simulate", "--out", "sim"]);
    let sim = d.path().join("sim");
    for digit in ["thumb", "index", "middle"] {
        for kind in ["flat_hand", "mcp_flexion"] {
            assert!(sim.join(format!("{digit}_{kind}.csv")).is_file(), "{digit}_{kind}");
        }
    }
    for task in ["thumb_thumb_mcp_ip", "index_index_mcp_only", "index_index_mcp_pip"] {
        assert!(sim.join(format!("{task}.csv")).is_file() && sim.join(format!("{task}_truth.csv")).is_file());
    }
    assert!(sim.join("truth_profile.json").is_file() && sim.join("manifest.json").is_file());
}

#[test]
fn unknown_config_field_is_named() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("bad.json"), r#"{"noize_deg": 0.1}"#).unwrap();
    let out = exocal(d.path(), &["simulate", "--config", "bad.json", "--out", "sim"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("noize_deg"), "{}", stderr(&out));
}

#[test]
fn missing_out_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let out = exocal(d.path(), &["simulate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seeded_simulation_is_byte_identical() {
    let a = simulated();
    let b = simulated();
    for e in fs::read_dir(a.path().join("sim")).unwrap() {
        let name = e.unwrap().file_name();
        let x = fs::read(a.path().join("sim").join(&name)).unwrap();
        let y = fs::read(b.path().join("sim").join(&name)).unwrap();
        assert!(x == y, "{name:?} differs");
    }
}

#[test]
fn calibration_writes_profile_and_is_repeatable() {
    let d = simulated();
    let logs = calib_logs(&["index", "thumb"]);
    assert!(run_owned(d.path(), &with(&["calibrate", "--seed", "1", "--out", "p1", "--data"], &logs)).status.success());
    assert!(run_owned(d.path(), &with(&["calibrate", "--seed", "1", "--out", "p2", "--data"], &logs)).status.success());
    let a = fs::read_to_string(d.path().join("p1/profile.json")).unwrap();
    assert_eq!(a, fs::read_to_string(d.path().join("p2/profile.json")).unwrap());
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    for digit in ["index", "thumb"] {
        assert!(v["digits"][digit]["optimizer"]["final_cost"].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn calibration_rejects_bad_inputs() {
    let d = simulated();
    fs::write(d.path().join("w.json"), r#"{"version": 1, "weights": {"index": [1, 1, 1, 1, 1]}}"#).unwrap();
    let out = run_owned(
        d.path(),
        &with(&["calibrate", "--weights", "w.json", "--out", "p", "--data"], &calib_logs(&["index"])),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("5 entries"), "{}", stderr(&out));

    let out = exocal(d.path(), &["calibrate", "--out", "p", "--data", "sim/index_flat_hand.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("phase 2"), "{}", stderr(&out));
}

#[test]
fn flat_hand_tracks_to_the_reference_posture() {
    let d = simulated();
    ok(
        d.path(),
        &[
            "track",
            "--profile",
            "sim/truth_profile.json",
            "--out",
            "t",
            "--log",
            "sim/index_flat_hand.csv",
            "sim/thumb_flat_hand.csv",
        ],
    );
    for (name, first) in [("index_flat_hand_track.csv", 0.0), ("thumb_flat_hand_track.csv", 70.0)] {
        for r in rows(&d.path().join("t").join(name)) {
            let q: Vec<f64> = r[1..4].iter().map(|c| c.parse().unwrap()).collect();
            // Sensor noise of 0.3° keeps the estimate close to, not on, the reference.
            assert!((q[0] - first).abs() < 3.0 && q[1].abs() < 3.0 && q[2].abs() < 3.0, "{name}: {q:?}");
        }
    }
}

#[test]
fn infeasible_frame_is_flagged_and_tracking_continues() {
    let d = simulated();
    let log = d.path().join("sim/index_index_mcp_pip.csv");
    let text = fs::read_to_string(&log).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let mut cells: Vec<String> = lines[5].split(',').map(str::to_string).collect();
    cells[2] = "0.5".into();
    lines[5] = cells.join(",");
    fs::write(&log, lines.join("\n") + "\n").unwrap();
    let out = exocal(
        d.path(),
        &["track", "--profile", "sim/truth_profile.json", "--out", "t", "--log", "sim/index_index_mcp_pip.csv"],
    );
    assert!(out.status.success());
    assert!(stderr(&out).contains("could not be solved"));
    let r = rows(&d.path().join("t/index_index_mcp_pip_track.csv"));
    assert_eq!(r[3].last().unwrap(), "0");
    assert!(r[3][1].is_empty());
    assert!(r.iter().filter(|x| x.last().unwrap() == "1").count() == r.len() - 1);
}

#[test]
fn calibrated_profile_tracks_closer_than_nominal() {
    let d = simulated();
    ok(
        d.path(),
        &["calibrate", "--seed", "2", "--out", "p", "--data", "sim/index_flat_hand.csv", "sim/index_mcp_flexion.csv"],
    );
    let log = "sim/index_index_mcp_pip.csv";
    ok(d.path(), &["track", "--profile", "nominal", "--out", "unc", "--log", log]);
    ok(d.path(), &["track", "--profile", "p/profile.json", "--out", "cal", "--log", log]);
    ok(
        d.path(),
        &[
            "report",
            "--out",
            "r",
            "--truth",
            "sim/index_index_mcp_pip_truth.csv",
            "--uncalibrated",
            "unc/index_index_mcp_pip_track.csv",
            "--even",
            "cal/index_index_mcp_pip_track.csv",
        ],
    );
    let r = rows(&d.path().join("r/report.csv"));
    let mean = |row: &[String]| row[3].parse::<f64>().unwrap();
    assert_eq!(r[0][0], "uncalibrated");
    assert!(mean(&r[1]) < mean(&r[0]), "{r:?}");
}

#[test]
fn report_edge_cases() {
    let d = simulated();
    let log = "sim/index_index_mcp_only.csv";
    ok(d.path(), &["track", "--profile", "nominal", "--out", "t", "--log", log]);
    let (truth, track) = ("sim/index_index_mcp_only_truth.csv", "t/index_index_mcp_only_track.csv");
    ok(d.path(), &["report", "--out", "r", "--truth", truth, "--uncalibrated", track, "--even", track]);
    let r = rows(&d.path().join("r/report.csv"));
    for cell in &r[1][7..] {
        assert_eq!(cell.parse::<f64>().unwrap(), 0.0);
    }

    let out = exocal(d.path(), &["report", "--out", "r", "--truth", truth, "--uncalibrated", track]);
    assert_eq!(out.status.code(), Some(2));

    let full = fs::read_to_string(d.path().join(truth)).unwrap();
    let cut: Vec<&str> = full.lines().take(10).collect();
    fs::write(d.path().join("cut_truth.csv"), cut.join("\n") + "\n").unwrap();
    let out = exocal(
        d.path(),
        &["report", "--out", "r", "--truth", "cut_truth.csv", "--uncalibrated", track, "--even", track],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("ground truth"), "{}", stderr(&out));
}

#[test]
fn weight_search_requires_seed_and_is_deterministic() {
    let d = simulated();
    fs::write(
        d.path().join("w.json"),
        r#"{"version": 1, "digit": "index", "n_candidates": 2, "calibration": {"n_starts": 2},
            "subjects": [{"id": "S01", "dir": "sim"}]}"#,
    )
    .unwrap();
    let out = exocal(d.path(), &["weights", "--config", "w.json", "--out", "w0"]);
    assert_eq!(out.status.code(), Some(2));
    ok(d.path(), &["weights", "--seed", "5", "--config", "w.json", "--out", "w1"]);
    ok(d.path(), &["weights", "--seed", "5", "--config", "w.json", "--out", "w2"]);
    for f in ["scores.csv", "weight_profile.csv", "weights.json"] {
        let a = fs::read(d.path().join("w1").join(f)).unwrap();
        let b = fs::read(d.path().join("w2").join(f)).unwrap();
        assert!(a == b, "{f} differs");
    }
    let scores = rows(&d.path().join("w1/scores.csv"));
    assert_eq!(scores.len(), 3);
    let best = &rows(&d.path().join("w1/weight_profile.csv"))[0];
    let even = best[best.len() - 1].parse::<f64>().unwrap();
    assert!(best[best.len() - 2].parse::<f64>().unwrap() <= even);
}
