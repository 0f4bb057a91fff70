mod common;

use exocal_core::angles::wrap_pi;
use exocal_core::kinematics::DigitKind;
use exocal_core::simulator::{
    apply_donning_perturbation, generate_trajectory, inverse_sensors, simulate_session, JointSample, ProtocolConfig,
    SimError, TrajectoryKind, TrajectorySpec,
};

use common::{nominal, subject};

fn max_joint_error(digit: DigitKind, scale: f64, donning_pct: f64, seed: u64) -> f64 {
    let s = subject(digit, scale, donning_pct, 0.0, seed);
    let session = simulate_session(&s, &ProtocolConfig::default()).unwrap();
    let mut recs: Vec<(&[_], &[JointSample])> = vec![
        (&session.calibration.phase1, &session.phase1_truth),
        (&session.calibration.phase2, &session.phase2_truth),
    ];
    recs.extend(session.tasks.iter().map(|t| (t.frames.as_slice(), t.truth.as_slice())));
    let mut worst = 0.0f64;
    for (frames, truth) in recs {
        for (f, gt) in frames.iter().zip(truth) {
            let q = s.model.joints_of(&s.model.solve(&s.virt_true, f).unwrap());
            for (a, b) in q.iter().zip(&gt.joints).take(s.model.n_joints()) {
                worst = worst.max(wrap_pi(a - b).abs());
            }
        }
    }
    worst
}

#[test]
fn round_trip_recovers_joints_on_every_protocol_trajectory() {
    for digit in DigitKind::ALL {
        let err = max_joint_error(digit, 1.0, 10.0, 3);
        assert!(err < 1e-9, "{digit}: {err}");
    }
}

#[test]
fn protocol_closes_across_hand_scales() {
    for digit in DigitKind::ALL {
        for scale in [0.9, 0.95, 1.0, 1.05, 1.1] {
            let err = max_joint_error(digit, scale, 0.0, 1);
            assert!(err < 1e-9, "{digit} at scale {scale}: {err}");
        }
    }
}

#[test]
fn noise_free_redundants_match_predictions() {
    for digit in DigitKind::ALL {
        let s = subject(digit, 1.0, 10.0, 0.0, 5);
        let session = simulate_session(&s, &ProtocolConfig::default()).unwrap();
        for t in &session.tasks {
            for f in &t.frames {
                let (_, red) = s.model.solve_with_redundants(&s.virt_true, f).unwrap();
                assert!(wrap_pi(red.delta1 - f.delta1).abs() < 1e-9);
                if digit.is_thumb() {
                    assert!(wrap_pi(red.delta3.unwrap() - f.delta3.unwrap()).abs() < 1e-9);
                } else {
                    assert!(wrap_pi(red.delta2.unwrap() - f.delta2.unwrap()).abs() < 1e-9);
                }
            }
        }
    }
}

#[test]
fn flat_hand_reference_posture() {
    let spec = TrajectorySpec { kind: TrajectoryKind::FlatHand, duration_s: 2.0, rate_hz: 100.0, amplitude_deg: 0.0 };
    let index = generate_trajectory(&spec, DigitKind::Index).unwrap();
    assert_eq!(index.len(), 200);
    assert!(index.iter().all(|s| s.joints == [0.0, 0.0, 0.0]));
    let thumb = generate_trajectory(&spec, DigitKind::Thumb).unwrap();
    assert!(thumb.iter().all(|s| (s.joints[0] - 70f64.to_radians()).abs() < 1e-15 && s.joints[1] == 0.0));
}

#[test]
fn index_mcp_only_keeps_pip_still() {
    let spec =
        TrajectorySpec { kind: TrajectoryKind::IndexMcpOnly, duration_s: 3.0, rate_hz: 50.0, amplitude_deg: 60.0 };
    let traj = generate_trajectory(&spec, DigitKind::Index).unwrap();
    assert!(traj.iter().all(|s| s.joints[1] == 0.0));
    let peak = traj.iter().map(|s| s.joints[0]).fold(0.0, f64::max);
    assert!((peak - 60f64.to_radians()).abs() < 1e-3);
}

#[test]
fn thumb_mcp_ip_coflexes_with_raised_cosine() {
    let spec = TrajectorySpec { kind: TrajectoryKind::ThumbMcpIp, duration_s: 2.0, rate_hz: 10.0, amplitude_deg: 40.0 };
    let traj = generate_trajectory(&spec, DigitKind::Thumb).unwrap();
    for s in &traj {
        let expected = 40f64.to_radians() * 0.5 * (1.0 - (std::f64::consts::TAU * s.t / 2.0).cos());
        assert!((s.joints[1] - expected).abs() < 1e-15 && (s.joints[2] - expected).abs() < 1e-15);
    }
    assert!(generate_trajectory(&spec, DigitKind::Index).is_err());
}

#[test]
fn unreachable_posture_reports_frame_index() {
    let s = subject(DigitKind::Index, 1.0, 0.0, 0.0, 0);
    let traj = vec![
        JointSample { t: 0.0, joints: [0.0, 0.0, 0.0] },
        JointSample { t: 0.01, joints: [0.2, 0.1, 0.0] },
        JointSample { t: 0.02, joints: [0.3, -2.5, 0.0] },
    ];
    match inverse_sensors(&s, &traj) {
        Err(SimError::Unreachable { frame, .. }) => assert_eq!(frame, 2),
        other => panic!("expected Unreachable, got {other:?}"),
    }
}

#[test]
fn donning_identity_and_determinism() {
    let (_, virt) = nominal(DigitKind::Thumb);
    assert_eq!(apply_donning_perturbation(&virt, 0.0, 9), virt);
    assert_eq!(apply_donning_perturbation(&virt, 10.0, 9), apply_donning_perturbation(&virt, 10.0, 9));
    assert_ne!(apply_donning_perturbation(&virt, 10.0, 9), apply_donning_perturbation(&virt, 10.0, 10));
}

#[test]
fn noise_is_zero_mean_with_requested_spread() {
    let sigma = 0.3f64.to_radians();
    let clean = subject(DigitKind::Index, 1.0, 0.0, 0.0, 4);
    let noisy = subject(DigitKind::Index, 1.0, 0.0, sigma, 4);
    let traj: Vec<JointSample> =
        (0..25_000).map(|i| JointSample { t: i as f64 * 0.01, joints: [0.3, 0.4, 0.0] }).collect();
    let a = inverse_sensors(&clean, &traj[..1]).unwrap()[0];
    let b = inverse_sensors(&noisy, &traj).unwrap();
    let mut d = Vec::new();
    for f in &b {
        d.extend([f.alpha2 - a.alpha2, f.beta2 - a.beta2, f.delta1 - a.delta1, f.delta2.unwrap() - a.delta2.unwrap()]);
    }
    let n = d.len() as f64;
    assert!(n >= 1e5);
    let mean = d.iter().sum::<f64>() / n;
    let sd = (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(mean.abs() < 3.0 * sigma / n.sqrt(), "mean {mean}");
    assert!((sd / sigma - 1.0).abs() < 0.02, "sd {sd}");
}
