//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use exocal_core::angles::{wrap_pi, wrap_two_pi};
use exocal_core::calibration::{calibrate, pooled_report, CalibrationOptions, WeightVector};
use exocal_core::config::HandGeometry;
use exocal_core::kinematics::{oracle_solve, DigitKind, DigitModel, ParamId, SensorFrame, VirtualLinks};
use exocal_core::sensitivity::{posture_grid, sweep_all};
use exocal_core::simulator::{
    apply_donning_perturbation, simulate_session, DigitSession, JointSample, ProtocolConfig, SyntheticSubject,
};
use exocal_core::weight_search::{search, search_with_candidates, SubjectData, WeightSearchConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn nominal(digit: DigitKind) -> (DigitModel, VirtualLinks) {
    let g = HandGeometry::shipped();
    (g.model(digit).unwrap(), g.nominal_virt(digit).unwrap())
}

fn simulate(digit: DigitKind, scale: f64, sigma_deg: f64, seed: u64) -> DigitSession {
    let (model, virt) = nominal(digit);
    let s = SyntheticSubject::new(&model, &virt, scale, 10.0, sigma_deg.to_radians(), seed).unwrap();
    simulate_session(&s, &ProtocolConfig::default()).unwrap()
}

fn task_pairs(s: &DigitSession) -> Vec<(&[SensorFrame], &[JointSample])> {
    s.tasks.iter().map(|t| (t.frames.as_slice(), t.truth.as_slice())).collect()
}

/// Uncalibrated and even-weight calibrated tracking errors: (joint rad, tip mm) each.
fn before_after(s: &DigitSession, seed: u64) -> ((f64, f64), (f64, f64)) {
    let digit = s.subject.model.digit;
    let model = &s.subject.model;
    let init = nominal(digit).1.scaled(s.subject.scale);
    let opts = CalibrationOptions { seed, ..CalibrationOptions::default() };
    let r = calibrate(model, &s.calibration, &WeightVector::even(digit), &init, &opts).unwrap();
    let pairs = task_pairs(s);
    let before = pooled_report(model, &init, &pairs, None).unwrap();
    let after = pooled_report(model, &r.virt, &pairs, None).unwrap();
    ((before.mean_joint_mae(), before.tip_mae_mm), (after.mean_joint_mae(), after.tip_mae_mm))
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let geometry = HandGeometry::shipped();
    let ang = |a: f64, b: f64| wrap_pi(a - b).abs();
    let mut notes = Vec::new();
    let mut pass = true;
    for digit in DigitKind::ALL {
        let model = geometry.model(digit).unwrap();
        let nominal = geometry.nominal_virt(digit).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + digit as u64);
        let (mut feasible, mut tried, mut disagree) = (0usize, 0usize, 0usize);
        let mut worst = 0.0f64;
        while feasible < 1000 && tried < 100_000 {
            tried += 1;
            let virt = if tried % 2 == 0 { nominal } else { apply_donning_perturbation(&nominal, 10.0, tried as u64) };
            let f = SensorFrame {
                t: 0.0,
                alpha2: rng.gen_range(-PI..PI),
                beta2: rng.gen_range(0.05..PI - 0.05),
                gamma2: digit.is_thumb().then(|| rng.gen_range(0.05..PI - 0.05)),
                delta1: 0.0,
                delta2: None,
                delta3: None,
            };
            match (model.solve(&virt, &f), oracle_solve(&model, &virt, &f)) {
                (Ok(c), Ok(o)) => {
                    feasible += 1;
                    let mut d = ang(c.theta1, o.theta1)
                        .max(ang(c.theta2, o.theta2))
                        .max(ang(c.beta3, o.intermediate[0]))
                        .max(ang(c.beta4, o.intermediate[2]))
                        .max(ang(c.beta5, o.intermediate[3]));
                    if let (Some(a), Some(b)) = (c.theta3, o.theta3) {
                        d = d.max(ang(a, b));
                    }
                    if let (Some(g3), Some(g5), Some(dist)) = (c.gamma3, c.gamma5, o.distal) {
                        d = d.max(ang(g3, dist[0])).max(ang(g5, dist[3]));
                    }
                    worst = worst.max(d);
                }
                (Err(_), Err(_)) => {}
                _ => disagree += 1,
            }
        }
        pass &= feasible >= 1000 && worst < 1e-9 && disagree == 0;
        notes
            .push(format!("{digit} {feasible} ok/{tried} worst {worst:.1e} rad, {disagree} feasibility disagreements"));
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(pass && secs < 10.0, format!("{}; {secs:.1} s", notes.join("; ")))
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let (mut better, mut runs) = (0usize, 0usize);
    let (mut joint_red, mut tip_red) = (Vec::new(), Vec::new());
    for seed in 0..20u64 {
        for digit in DigitKind::ALL {
            let s = simulate(digit, 1.0, 0.0, 2000 + seed);
            let ((jb, tb), (ja, ta)) = before_after(&s, seed);
            runs += 1;
            better += usize::from(ja < jb);
            joint_red.push(100.0 * (jb - ja) / jb);
            tip_red.push(100.0 * (tb - ta) / tb);
        }
    }
    let frac = better as f64 / runs as f64;
    let (mj, mt) = (median(joint_red), median(tip_red));
    let secs = start.elapsed().as_secs_f64();
    verdict(
        frac >= 0.9 && mj >= 50.0 && mt >= 50.0 && secs < 300.0,
        format!("calibrated better in {better}/{runs}; median reduction joint {mj:.1}%, tip {mt:.1}%; {secs:.1} s"),
    )
}

fn criterion_3() -> Verdict {
    let mut notes = Vec::new();
    let mut pass = true;
    for digit in DigitKind::ALL {
        let s = simulate(digit, 1.0, 0.0, 3000);
        let truth = s.subject.virt_true;
        let opts = CalibrationOptions { seed: 3, ..CalibrationOptions::default() };
        let r = calibrate(&s.subject.model, &s.calibration, &WeightVector::even(digit), &truth, &opts).unwrap();
        let disp = r.virt.as_slice().iter().zip(truth.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        pass &= r.final_cost < 1e-12 && disp < 1e-6;
        notes.push(format!("{digit} cost {:.1e}, displacement {disp:.1e} mm", r.final_cost));
    }
    verdict(pass, notes.join("; "))
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let geometry = HandGeometry::shipped();
    let digit = DigitKind::Index;
    let lengths = [17.0, 17.2, 18.0, 18.5, 17.0, 19.2, 18.1];
    let subjects: Vec<SubjectData> = lengths
        .iter()
        .enumerate()
        .map(|(i, &len)| {
            let scale = geometry.hand_scale(len);
            let s = simulate(digit, scale, 0.3, 4000 + i as u64);
            SubjectData {
                id: format!("S{}", i + 1),
                model: s.subject.model,
                init: nominal(digit).1.scaled(scale),
                calibration: s.calibration.clone(),
                tasks: s.tasks.iter().map(|t| (t.frames.clone(), t.truth.clone())).collect(),
            }
        })
        .collect();
    let cfg = WeightSearchConfig { n_candidates: 100, seed: 4, include_even: true, ..WeightSearchConfig::default() };
    let opts = CalibrationOptions { seed: 4, ..CalibrationOptions::default() };
    let out = search(&subjects, &cfg, &opts).unwrap();

    let mut dominated = 0;
    let mut strictly = 0;
    for (best, row) in out.per_subject.iter().zip(&out.table) {
        let even = row[0].score;
        dominated += usize::from(best.score <= even && row.iter().all(|c| best.score <= c.score));
        strictly += usize::from(best.score < even);
    }
    // Rerun a slice of the search and compare every score bit for bit.
    let again = search_with_candidates(&subjects[..2], out.candidates[..12].to_vec(), &opts).unwrap();
    let same = again.table.iter().zip(&out.table).all(|(a, b)| {
        a.iter()
            .zip(b)
            .all(|(x, y)| x.score.to_bits() == y.score.to_bits() && x.tip_mae_mm.to_bits() == y.tip_mae_mm.to_bits())
    });
    let secs = start.elapsed().as_secs_f64();
    let avg: Vec<String> = out.averaged.iter().map(|w| format!("{w:.2}")).collect();
    verdict(
        dominated == subjects.len() && same && secs < 1800.0,
        format!(
            "optimal <= even for {dominated}/{} subjects ({strictly} strictly); rerun identical: {same}; \
             averaged weights [{}]; {secs:.1} s",
            subjects.len(),
            avg.join(", ")
        ),
    )
}

fn criterion_5() -> Verdict {
    let (model, virt) = nominal(DigitKind::Index);
    let postures = posture_grid(&model, &virt, 5, 5).unwrap();
    let curves = sweep_all(&model, &virt, &[0.0, 10.0], &postures).unwrap();
    let dev = |p: ParamId| curves.iter().find(|c| c.param == p).unwrap().at(10.0).unwrap().deviation_mm;
    let zero = curves.iter().all(|c| c.at(0.0).unwrap().deviation_mm == 0.0);
    let (x1, x3, y1, y3) = (dev(ParamId::X1), dev(ParamId::X3), dev(ParamId::Y1), dev(ParamId::Y3));
    let pass = zero && x1.min(x3) > y1.max(y3) && (10.0..=40.0).contains(&x1);
    verdict(pass, format!("+10%: x1 {x1:.2} mm, x3 {x3:.2} mm, y1 {y1:.2} mm, y3 {y3:.2} mm; 0% exactly zero: {zero}"))
}

fn criterion_6() -> Verdict {
    let (mut worst, mut worst_geom, mut frames) = (0.0f64, 0.0f64, 0usize);
    for digit in DigitKind::ALL {
        let s = simulate(digit, 1.0, 0.0, 6000);
        let (model, virt) = (&s.subject.model, &s.subject.virt_true);
        let mut all: Vec<&SensorFrame> = s.calibration.phase1.iter().chain(&s.calibration.phase2).collect();
        all.extend(s.tasks.iter().flat_map(|t| &t.frames));
        for f in all {
            let (_, red) = model.solve_with_redundants(virt, f).unwrap();
            let mut d = wrap_pi(red.delta1 - f.delta1).abs();
            if let (Some(p), Some(m)) = (red.delta2, f.delta2) {
                d = d.max(wrap_pi(p - m).abs());
            }
            if let (Some(p), Some(m)) = (red.delta3, f.delta3) {
                d = d.max(wrap_pi(p - m).abs());
            }
            worst = worst.max(d);
            // Independent check: delta1 is the angle of link d2 measured from link b1.
            let o = oracle_solve(model, virt, f).unwrap();
            let [p, q, _, _] = o.intermediate_vertices;
            let geom = wrap_two_pi((q[1] - p[1]).atan2(q[0] - p[0]) + o.theta1 - f.alpha2);
            worst_geom = worst_geom.max(wrap_pi(geom - f.delta1).abs());
            frames += 1;
        }
    }
    verdict(
        worst < 1e-9 && worst_geom < 1e-9,
        format!(
            "{frames} frames; predicted vs sensed {worst:.1e} rad; delta1 vs linkage geometry {worst_geom:.1e} rad"
        ),
    )
}

fn criterion_7() -> Verdict {
    let mut ok_seeds = 0;
    let mut worst = [0.0f64; 3];
    for seed in 0..20u64 {
        let mut all_ok = true;
        for (k, digit) in DigitKind::ALL.into_iter().enumerate() {
            let s = simulate(digit, 1.0, 0.3, 7000 + seed);
            let (_, (_, tip)) = before_after(&s, seed);
            worst[k] = worst[k].max(tip);
            all_ok &= tip <= 10.0;
        }
        ok_seeds += usize::from(all_ok);
    }
    verdict(
        ok_seeds >= 16,
        format!(
            "{ok_seeds}/20 seeds with every digit <= 10 mm; worst tip MAE thumb {:.2}, index {:.2}, middle {:.2} mm",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn exocal(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_exocal"))
        .args(args)
        .current_dir(dir)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("exocal {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)))
    }
}

fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

fn pipeline(dir: &Path) -> Result<(), String> {
    let weights_cfg = r#"{"version": 1, "digit": "index", "n_candidates": 3,
        "calibration": {"n_starts": 2},
        "subjects": [{"id": "S01", "dir": "sim"}, {"id": "S02", "dir": "sim2", "hand_length_cm": 19.0}]}"#;
    fs::write(dir.join("sim2.json"), r#"{"subject_id": "S02", "hand_length_cm": 19.0, "digits": ["index"]}"#)
        .map_err(|e| e.to_string())?;
    fs::write(dir.join("weights.json"), weights_cfg).map_err(|e| e.to_string())?;
    let calib: Vec<String> = DigitKind::ALL
        .iter()
        .flat_map(|d| [format!("sim/{d}_flat_hand.csv"), format!("sim/{d}_mcp_flexion.csv")])
        .collect();
    let tasks = ["index_index_mcp_only", "index_index_mcp_pip"];
    let logs: Vec<String> = tasks.iter().map(|t| format!("sim/{t}.csv")).collect();
    let truth: Vec<String> = tasks.iter().map(|t| format!("sim/{t}_truth.csv")).collect();
    let unc: Vec<String> = tasks.iter().map(|t| format!("unc/{t}_track.csv")).collect();
    let cal: Vec<String> = tasks.iter().map(|t| format!("cal/{t}_track.csv")).collect();

    exocal(dir, &["simulate", "--seed", "8", "--out", "sim"])?;
    exocal(dir, &["simulate", "--seed", "9", "--config", "sim2.json", "--out", "sim2"])?;
    exocal(dir, &[&["calibrate", "--seed", "8", "--out", "profile", "--data"][..], &strs(&calib)].concat())?;
    exocal(dir, &[&["track", "--profile", "nominal", "--out", "unc", "--log"][..], &strs(&logs)].concat())?;
    exocal(
        dir,
        &[&["track", "--profile", "profile/profile.json", "--out", "cal", "--log"][..], &strs(&logs)].concat(),
    )?;
    exocal(
        dir,
        &[
            &["report", "--svg", "--profile", "sim/truth_profile.json", "--out", "report", "--truth"][..],
            &strs(&truth),
            &["--uncalibrated"],
            &strs(&unc),
            &["--even"],
            &strs(&cal),
        ]
        .concat(),
    )?;
    exocal(dir, &["weights", "--seed", "8", "--config", "weights.json", "--out", "weights"])?;
    exocal(dir, &["sensitivity", "--svg", "--out", "sens"])?;
    Ok(())
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn criterion_8() -> Verdict {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    if let Err(e) = pipeline(a.path()).and_then(|_| pipeline(b.path())) {
        return verdict(false, e);
    }
    let (fa, fb) = (files_under(a.path()), files_under(b.path()));
    if fa != fb {
        return verdict(false, "the two runs produced different file sets".into());
    }
    let differing: Vec<String> = fa
        .iter()
        .filter(|p| fs::read(a.path().join(p)).unwrap() != fs::read(b.path().join(p)).unwrap())
        .map(|p| p.display().to_string())
        .collect();
    verdict(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} files byte-identical across two full pipeline runs", fa.len())
        } else {
            format!("differing files: {}", differing.join(", "))
        },
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("oracle equivalence", criterion_1),
        ("round-trip recovery", criterion_2),
        ("zero-residual fixed point", criterion_3),
        ("weight-search dominance", criterion_4),
        ("sensitivity reproduction", criterion_5),
        ("redundant consistency", criterion_6),
        ("noise robustness", criterion_7),
        ("determinism", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let v = run();
        println!("{} criterion {} ({name}): {}", if v.pass { "PASS" } else { "FAIL" }, i + 1, v.detail);
        failed += usize::from(!v.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
