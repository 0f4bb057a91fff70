//! Synthetic human + exoskeleton used as ground truth.
//!
//! Joint trajectories are generated for the calibration protocol and the tracking
//! tasks, then inverted through the loop model to produce sensor frames. Redundant
//! channels are filled from the model's own prediction so a noise-free recording is
//! exactly consistent with the geometry that produced it.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angles::wrap_pi;
use crate::calibration::CalibrationDataset;
use crate::kinematics::{
    solve_distal_with, solve_intermediate_with, solve_proximal_with, DigitKind, DigitModel, KinematicsError,
    SensorFrame, VirtualLinks,
};
use crate::seeds;

/// Thumb CMC flexion in the flat-hand posture (degrees).
pub const THUMB_CMC_REF_DEG: f64 = 70.0;

/// Default sensor noise standard deviation (degrees).
pub const DEFAULT_NOISE_DEG: f64 = 0.3;

const MAX_FLEXION_DEG: f64 = 100.0;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SimError {
    #[error("bad trajectory spec: {0}")]
    BadSpec(String),
    #[error("frame {frame}: joint configuration outside the loop workspace ({detail})")]
    Unreachable { frame: usize, detail: String },
    #[error("bad subject: {0}")]
    BadSubject(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    FlatHand,
    McpFlexion,
    ThumbMcpIp,
    IndexMcpOnly,
    IndexMcpPip,
}

impl TrajectoryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TrajectoryKind::FlatHand => "flat_hand",
            TrajectoryKind::McpFlexion => "mcp_flexion",
            TrajectoryKind::ThumbMcpIp => "thumb_mcp_ip",
            TrajectoryKind::IndexMcpOnly => "index_mcp_only",
            TrajectoryKind::IndexMcpPip => "index_mcp_pip",
        }
    }

    /// Tracking tasks evaluated for a digit.
    pub fn tasks_for(digit: DigitKind) -> &'static [TrajectoryKind] {
        if digit.is_thumb() {
            &[TrajectoryKind::ThumbMcpIp]
        } else {
            &[TrajectoryKind::IndexMcpOnly, TrajectoryKind::IndexMcpPip]
        }
    }
}

impl std::fmt::Display for TrajectoryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySpec {
    pub kind: TrajectoryKind,
    pub duration_s: f64,
    pub rate_hz: f64,
    pub amplitude_deg: f64,
}

/// Ground-truth anatomical joints at one instant: `[θ1, θ2, θ3]` in radians.
/// Fingers leave `θ3 = 0`; their DIP follows from the coupling ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointSample {
    pub t: f64,
    pub joints: [f64; 3],
}

fn raised_cosine(t: f64, period: f64) -> f64 {
    0.5 * (1.0 - (TAU * t / period).cos())
}

/// Samples a joint trajectory for one digit.
pub fn generate_trajectory(spec: &TrajectorySpec, digit: DigitKind) -> Result<Vec<JointSample>, SimError> {
    if !(spec.rate_hz > 0.0 && spec.rate_hz.is_finite()) {
        return Err(SimError::BadSpec(format!("rate must be positive, got {}", spec.rate_hz)));
    }
    if !(spec.duration_s > 0.0 && spec.duration_s.is_finite()) {
        return Err(SimError::BadSpec(format!("duration must be positive, got {}", spec.duration_s)));
    }
    if !(0.0..=MAX_FLEXION_DEG).contains(&spec.amplitude_deg) {
        return Err(SimError::BadSpec(format!("amplitude {} deg outside [0, {MAX_FLEXION_DEG}]", spec.amplitude_deg)));
    }
    match (spec.kind, digit.is_thumb()) {
        (TrajectoryKind::ThumbMcpIp, false) => {
            return Err(SimError::BadSpec(format!("thumb_mcp_ip does not apply to {digit}")))
        }
        (TrajectoryKind::IndexMcpOnly | TrajectoryKind::IndexMcpPip, true) => {
            return Err(SimError::BadSpec(format!("{} does not apply to the thumb", spec.kind)))
        }
        _ => {}
    }

    let n = (spec.duration_s * spec.rate_hz).round() as usize;
    if n == 0 {
        return Err(SimError::BadSpec("trajectory has no frames".into()));
    }
    let amp = spec.amplitude_deg.to_radians();
    let cmc = if digit.is_thumb() { THUMB_CMC_REF_DEG.to_radians() } else { 0.0 };
    Ok((0..n)
        .map(|i| {
            let t = i as f64 / spec.rate_hz;
            let q = amp * raised_cosine(t, spec.duration_s);
            let joints = match (spec.kind, digit.is_thumb()) {
                (TrajectoryKind::FlatHand, _) => [cmc, 0.0, 0.0],
                (TrajectoryKind::McpFlexion, true) => [cmc, q, 0.0],
                (TrajectoryKind::McpFlexion, false) | (TrajectoryKind::IndexMcpOnly, _) => [q, 0.0, 0.0],
                (TrajectoryKind::ThumbMcpIp, _) => [cmc, q, q],
                (TrajectoryKind::IndexMcpPip, _) => [q, q, 0.0],
            };
            JointSample { t, joints }
        })
        .collect())
}

/// A simulated wearer of one digit module.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSubject {
    /// Digit model with the subject's phalanges (hardware unchanged).
    pub model: DigitModel,
    pub virt_true: VirtualLinks,
    pub scale: f64,
    /// Sensor noise standard deviation (radians).
    pub noise_sigma: f64,
    pub noise_seed: u64,
}

impl SyntheticSubject {
    /// Scales the nominal virtual links and phalanges by `scale`, then applies a
    /// seeded donning perturbation of `donning_pct` percent.
    pub fn new(
        nominal: &DigitModel,
        virt_nominal: &VirtualLinks,
        scale: f64,
        donning_pct: f64,
        noise_sigma: f64,
        seed: u64,
    ) -> Result<Self, SimError> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(SimError::BadSubject(format!("hand scale must be positive, got {scale}")));
        }
        if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
            return Err(SimError::BadSubject(format!("noise sigma must be non-negative, got {noise_sigma}")));
        }
        if !(donning_pct >= 0.0 && donning_pct.is_finite()) {
            return Err(SimError::BadSubject(format!("donning magnitude must be non-negative, got {donning_pct}")));
        }
        let tag = nominal.digit as u64;
        let virt_true =
            apply_donning_perturbation(&virt_nominal.scaled(scale), donning_pct, seeds::derive(seed, 0x100 + tag));
        Ok(SyntheticSubject {
            model: nominal.with_hand_scale(scale),
            virt_true,
            scale,
            noise_sigma,
            noise_seed: seeds::derive(seed, 0x200 + tag),
        })
    }
}

/// Multiplies each coordinate by an independent factor drawn from `U[1 − m, 1 + m]`.
pub fn apply_donning_perturbation(virt: &VirtualLinks, magnitude_pct: f64, seed: u64) -> VirtualLinks {
    let m = magnitude_pct / 100.0;
    if m == 0.0 {
        return *virt;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = *virt;
    for &p in &crate::kinematics::ParamId::ALL[..virt.len()] {
        let f: f64 = rng.gen_range(1.0 - m..=1.0 + m);
        out = out.with(p, virt.get(p).unwrap() * f);
    }
    out
}

type P2 = [f64; 2];

fn circle_intersections(c0: P2, r0: f64, c1: P2, r1: f64) -> Option<[P2; 2]> {
    let dx = c1[0] - c0[0];
    let dy = c1[1] - c0[1];
    let d = dx.hypot(dy);
    if d == 0.0 || d > r0 + r1 || d < (r0 - r1).abs() {
        return None;
    }
    let a = (r0 * r0 - r1 * r1 + d * d) / (2.0 * d);
    let h = (r0 * r0 - a * a).max(0.0).sqrt();
    let mx = c0[0] + a * dx / d;
    let my = c0[1] + a * dy / d;
    Some([[mx - h * dy / d, my + h * dx / d], [mx + h * dy / d, my - h * dx / d]])
}

fn cross3(a: P2, b: P2, c: P2) -> f64 {
    (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
}

fn convex_ccw(v: [P2; 4]) -> bool {
    (0..4).all(|i| cross3(v[i], v[(i + 1) % 4], v[(i + 2) % 4]) > 0.0)
}

/// Interior angle at `v` of a counter-clockwise polygon.
fn interior(prev: P2, v: P2, next: P2) -> f64 {
    let a = [next[0] - v[0], next[1] - v[1]];
    let b = [prev[0] - v[0], prev[1] - v[1]];
    (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1]).rem_euclid(TAU)
}

/// Solves a four-bar `V0 V1 V2 V3` for the interior angle at `V1` given `V0`, `V2`, `V3`.
fn quad_input_angle(v0: P2, v2: P2, v3: P2, l01: f64, l12: f64) -> Option<f64> {
    let cands = circle_intersections(v0, l01, v2, l12)?;
    cands.into_iter().find(|&v1| convex_ccw([v0, v1, v2, v3])).map(|v1| interior(v0, v1, v2))
}

/// Refines `x0` to a root of `f` by bracketing and bisection.
fn refine_root(f: impl Fn(f64) -> Option<f64>, x0: f64) -> Option<f64> {
    let f0 = f(x0)?;
    if f0 == 0.0 {
        return Some(x0);
    }
    let mut h = 0.05;
    let mut bracket = None;
    for _ in 0..30 {
        for (lo, hi) in [(x0 - h, x0), (x0, x0 + h)] {
            if let (Some(fl), Some(fh)) = (f(lo), f(hi)) {
                if fl.signum() != fh.signum() || fl == 0.0 || fh == 0.0 {
                    bracket = Some((lo, hi, fl));
                    break;
                }
            }
        }
        if bracket.is_some() {
            break;
        }
        h *= 0.5;
    }
    let Some((mut lo, mut hi, mut flo)) = bracket else {
        return (f0.abs() < 1e-12).then_some(x0);
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let (fl, fh) = (f(lo)?.abs(), f(hi)?.abs());
    Some(if fl <= fh { lo } else { hi })
}

fn unreachable_at(frame: usize, detail: impl Into<String>) -> SimError {
    SimError::Unreachable { frame, detail: detail.into() }
}

/// Noise-free sensor readings that reproduce the given joints through the model.
pub fn exact_sensors(
    model: &DigitModel,
    virt: &VirtualLinks,
    joints: &[f64; 3],
    t: f64,
    frame: usize,
) -> Result<SensorFrame, SimError> {
    let g = &model.geom;
    let (th1, th2, th3) = (joints[0], joints[1], joints[2]);
    let c1 = virt.c1();

    // Proximal: slider point on the cuff line, at distance b1 from the anchor.
    let u = [th1.cos(), th1.sin()];
    let nd = [th1.sin(), -th1.cos()];
    let w = [c1 * nd[0] - virt.x1(), c1 * nd[1] - virt.y1()];
    let bq = u[0] * w[0] + u[1] * w[1];
    let cq = w[0] * w[0] + w[1] * w[1] - g.b1 * g.b1;
    let disc = bq * bq - cq;
    if disc < 0.0 {
        return Err(unreachable_at(frame, "proximal link cannot reach the cuff line"));
    }
    let s = -bq + disc.sqrt();
    if s <= 0.0 {
        return Err(unreachable_at(frame, "proximal slider would retract past the joint"));
    }
    let p = [s * u[0] + c1 * nd[0], s * u[1] + c1 * nd[1]];
    let alpha_seed = (p[1] - virt.y1()).atan2(p[0] - virt.x1());
    let prox = |a: f64| solve_proximal_with(g, virt, a, model.form).ok();
    let alpha2 = refine_root(|a| prox(a).map(|s| wrap_pi(s.theta1 - th1)), alpha_seed)
        .ok_or_else(|| unreachable_at(frame, "proximal inversion did not converge"))?;
    let d1 = prox(alpha2).ok_or_else(|| unreachable_at(frame, "proximal loop infeasible"))?.d1;

    // Intermediate: R on the middle phalanx, Q closes the four-bar.
    let b2 = virt.x3().hypot(virt.y3());
    let beta6 = virt.y3().atan2(virt.x3());
    let pj = [d1, -c1];
    let jj = [virt.l1(), 0.0];
    let rr = [jj[0] + b2 * (th2 - beta6).cos(), jj[1] + b2 * (th2 - beta6).sin()];
    let beta_seed = quad_input_angle(pj, rr, jj, g.d2, g.a2)
        .ok_or_else(|| unreachable_at(frame, "intermediate four-bar cannot close"))?;
    let inter = |b: f64| solve_intermediate_with(g, virt, b, d1, model.form).ok();
    let beta2 = refine_root(|b| inter(b).map(|s| wrap_pi(s.theta2 - th2)), beta_seed)
        .ok_or_else(|| unreachable_at(frame, "intermediate inversion did not converge"))?;

    let gamma2 = if model.digit.is_thumb() {
        let d = g.distal().map_err(|e| unreachable_at(frame, e.to_string()))?;
        let (x4, y4) = (virt.x4().unwrap_or(0.0), virt.y4().unwrap_or(0.0));
        let b3 = x4.hypot(y4);
        let gamma6 = y4.atan2(x4);
        let k = [-d.c3 * d.gamma1.cos(), -d.c3 * d.gamma1.sin()];
        let uu = [0.0, 0.0];
        let tt = [b3 * (th3 - gamma6).cos(), b3 * (th3 - gamma6).sin()];
        let seed = quad_input_angle(k, tt, uu, d.d3, d.a3)
            .ok_or_else(|| unreachable_at(frame, "distal four-bar cannot close"))?;
        let dist = |c: f64| solve_distal_with(model.digit, g, virt, c, model.form).ok();
        Some(
            refine_root(|c| dist(c).map(|s| wrap_pi(s.theta3 - th3)), seed)
                .ok_or_else(|| unreachable_at(frame, "distal inversion did not converge"))?,
        )
    } else {
        None
    };

    let mut f = SensorFrame { t, alpha2, beta2, gamma2, delta1: 0.0, delta2: None, delta3: None };
    let (_, red) =
        model.solve_with_redundants(virt, &f).map_err(|e: KinematicsError| unreachable_at(frame, e.to_string()))?;
    f.delta1 = red.delta1;
    f.delta2 = red.delta2;
    f.delta3 = red.delta3;
    Ok(f)
}

/// Sensor frames for a joint trajectory, with Gaussian noise on every channel.
pub fn inverse_sensors(subject: &SyntheticSubject, traj: &[JointSample]) -> Result<Vec<SensorFrame>, SimError> {
    inverse_sensors_seeded(subject, traj, subject.noise_seed)
}

pub fn inverse_sensors_seeded(
    subject: &SyntheticSubject,
    traj: &[JointSample],
    noise_seed: u64,
) -> Result<Vec<SensorFrame>, SimError> {
    let mut frames = traj
        .iter()
        .enumerate()
        .map(|(i, s)| exact_sensors(&subject.model, &subject.virt_true, &s.joints, s.t, i))
        .collect::<Result<Vec<_>, _>>()?;
    if subject.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, subject.noise_sigma).expect("sigma validated");
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
        for f in &mut frames {
            f.alpha2 += normal.sample(&mut rng);
            f.beta2 += normal.sample(&mut rng);
            if let Some(g) = f.gamma2.as_mut() {
                *g += normal.sample(&mut rng);
            }
            f.delta1 += normal.sample(&mut rng);
            if let Some(d) = f.delta2.as_mut() {
                *d += normal.sample(&mut rng);
            }
            if let Some(d) = f.delta3.as_mut() {
                *d += normal.sample(&mut rng);
            }
        }
    }
    Ok(frames)
}

/// Durations, rates and amplitudes of the simulated protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub rate_hz: f64,
    pub phase1_s: f64,
    pub phase2_s: f64,
    pub task_s: f64,
    pub finger_amplitude_deg: f64,
    pub thumb_amplitude_deg: f64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            rate_hz: 50.0,
            phase1_s: 1.0,
            phase2_s: 4.0,
            task_s: 3.0,
            finger_amplitude_deg: 60.0,
            thumb_amplitude_deg: 40.0,
        }
    }
}

impl ProtocolConfig {
    pub fn amplitude_deg(&self, digit: DigitKind) -> f64 {
        if digit.is_thumb() {
            self.thumb_amplitude_deg
        } else {
            self.finger_amplitude_deg
        }
    }

    pub fn spec(&self, kind: TrajectoryKind, digit: DigitKind) -> TrajectorySpec {
        let duration_s = match kind {
            TrajectoryKind::FlatHand => self.phase1_s,
            TrajectoryKind::McpFlexion => self.phase2_s,
            _ => self.task_s,
        };
        let amplitude_deg = if kind == TrajectoryKind::FlatHand { 0.0 } else { self.amplitude_deg(digit) };
        TrajectorySpec { kind, duration_s, rate_hz: self.rate_hz, amplitude_deg }
    }
}

/// One recorded tracking task with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskRecording {
    pub kind: TrajectoryKind,
    pub frames: Vec<SensorFrame>,
    pub truth: Vec<JointSample>,
}

/// Everything simulated for one digit of one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitSession {
    pub subject: SyntheticSubject,
    pub calibration: CalibrationDataset,
    pub phase1_truth: Vec<JointSample>,
    pub phase2_truth: Vec<JointSample>,
    pub tasks: Vec<TaskRecording>,
}

/// Simulates the two calibration phases and the digit's tracking tasks.
pub fn simulate_session(subject: &SyntheticSubject, protocol: &ProtocolConfig) -> Result<DigitSession, SimError> {
    let digit = subject.model.digit;
    let record = |kind: TrajectoryKind, stream: u64| -> Result<(Vec<SensorFrame>, Vec<JointSample>), SimError> {
        let truth = generate_trajectory(&protocol.spec(kind, digit), digit)?;
        let frames = inverse_sensors_seeded(subject, &truth, seeds::derive(subject.noise_seed, stream))?;
        Ok((frames, truth))
    };
    let (p1, p1_truth) = record(TrajectoryKind::FlatHand, 1)?;
    let (p2, p2_truth) = record(TrajectoryKind::McpFlexion, 2)?;
    let mut tasks = Vec::new();
    for (i, &kind) in TrajectoryKind::tasks_for(digit).iter().enumerate() {
        let (frames, truth) = record(kind, 10 + i as u64)?;
        tasks.push(TaskRecording { kind, frames, truth });
    }
    let calibration = CalibrationDataset::new(digit, p1, p2).map_err(|e| SimError::BadSpec(e.to_string()))?;
    Ok(DigitSession { subject: subject.clone(), calibration, phase1_truth: p1_truth, phase2_truth: p2_truth, tasks })
}
