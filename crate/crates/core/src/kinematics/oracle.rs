//! Numeric loop-closure solver used to cross-check the closed forms.
//!
//! Each loop is solved directly from its vector closure equation by scanning the
//! free angle for sign changes and bisecting every bracket to machine precision.
//! Nothing here reuses the closed-form triangle relations.

use std::f64::consts::PI;

use super::model::DigitModel;
use super::types::{SensorFrame, VirtualLinks};
use super::KinematicsError;
use crate::angles::wrap_pi;

type V2 = [f64; 2];

const SCAN_STEPS: usize = 4096;
const MERGE_TOL: f64 = 1e-9;

/// Prismatic-slider loop: a link of length `b1` hinged at `anchor` carries a point
/// that must lie on the line at perpendicular distance `c1` (dorsal side) from the
/// rotating phalanx axis through the origin.
#[derive(Debug, Clone, Copy)]
pub struct RrprLoop {
    pub anchor: V2,
    pub b1: f64,
    pub c1: f64,
}

/// Four-bar loop `V0 → V1 → V2 → V3` (counter-clockwise, simple) with `V0` and `V3`
/// fixed; the known input is the interior angle at `V1`.
#[derive(Debug, Clone, Copy)]
pub struct RrrrLoop {
    pub v0: V2,
    pub v3: V2,
    pub l01: f64,
    pub l12: f64,
    pub l23: f64,
}

#[derive(Debug, Clone, Copy)]
pub enum LoopSpec {
    Rrpr(RrprLoop),
    Rrrr(RrrrLoop),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleSolution {
    Rrpr { theta: f64, d1: f64, residual: f64 },
    Rrrr { vertices: [V2; 4], interior: [f64; 4], residual: f64 },
}

impl OracleSolution {
    pub fn residual(&self) -> f64 {
        match self {
            OracleSolution::Rrpr { residual, .. } | OracleSolution::Rrrr { residual, .. } => *residual,
        }
    }
}

fn e(a: f64) -> V2 {
    [a.cos(), a.sin()]
}

fn sub(a: V2, b: V2) -> V2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: V2, b: V2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: V2, b: V2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: V2) -> f64 {
    a[0].hypot(a[1])
}

fn angle_of(a: V2) -> f64 {
    a[1].atan2(a[0])
}

/// All roots of `f` on `[-π, π)` found by sign-change scan and bisection.
fn scan_roots(f: impl Fn(f64) -> f64) -> Vec<f64> {
    let step = 2.0 * PI / SCAN_STEPS as f64;
    let mut roots = Vec::new();
    let mut lo = -PI;
    let mut f_lo = f(lo);
    for i in 1..=SCAN_STEPS {
        let hi = -PI + i as f64 * step;
        let f_hi = f(hi);
        if f_lo == 0.0 {
            roots.push(lo);
        } else if f_lo.signum() != f_hi.signum() && f_hi != 0.0 {
            roots.push(bisect(&f, lo, hi, f_lo));
        }
        lo = hi;
        f_lo = f_hi;
    }
    roots
}

fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut f_lo: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == f_lo.signum() {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    if f(lo).abs() <= f(hi).abs() {
        lo
    } else {
        hi
    }
}

fn dedup(mut roots: Vec<f64>) -> Vec<f64> {
    roots.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::new();
    for r in roots {
        let dup = out.iter().any(|q| wrap_pi(r - q).abs() < MERGE_TOL);
        if !dup {
            out.push(r);
        }
    }
    out
}

fn pick_one(roots: Vec<f64>) -> Result<f64, KinematicsError> {
    let roots = dedup(roots);
    match roots.as_slice() {
        [] => Err(KinematicsError::NoAssembly),
        [r] => Ok(*r),
        [a, b, ..] => Err(KinematicsError::AmbiguousBranch { first: *a, second: *b }),
    }
}

/// Interior angle at `v` for a counter-clockwise polygon with neighbours `prev`, `next`.
fn interior(prev: V2, v: V2, next: V2) -> f64 {
    let a = sub(next, v);
    let b = sub(prev, v);
    cross(a, b).atan2(dot(a, b)).rem_euclid(2.0 * PI)
}

/// Simple counter-clockwise assembly: `V1` right of the diagonal `V0 → V2`, `V3` left of it.
/// The angles at `V0` and `V2` may be reflex.
fn simple_ccw(vs: &[V2; 4]) -> bool {
    let diag = sub(vs[2], vs[0]);
    cross(diag, sub(vs[1], vs[0])) < 0.0 && cross(diag, sub(vs[3], vs[0])) > 0.0
}

fn rrrr_vertices(l: &RrrrLoop, beta: f64, phi: f64) -> [V2; 4] {
    let v1 = [l.v0[0] + l.l01 * phi.cos(), l.v0[1] + l.l01 * phi.sin()];
    let d = e(phi + PI - beta);
    let v2 = [v1[0] + l.l12 * d[0], v1[1] + l.l12 * d[1]];
    [l.v0, v1, v2, l.v3]
}

/// Solves one loop numerically for the given known input angle.
pub fn loop_closure_oracle(spec: &LoopSpec, known: f64) -> Result<OracleSolution, KinematicsError> {
    match spec {
        LoopSpec::Rrpr(l) => {
            let p = [l.anchor[0] + l.b1 * known.cos(), l.anchor[1] + l.b1 * known.sin()];
            // Dorsal normal of the phalanx axis at angle θ is (sin θ, −cos θ).
            let f = |th: f64| p[0] * th.sin() - p[1] * th.cos() - l.c1;
            let roots = scan_roots(f).into_iter().filter(|th| dot(p, e(*th)) > 0.0).collect();
            let theta = pick_one(roots)?;
            Ok(OracleSolution::Rrpr { theta, d1: dot(p, e(theta)), residual: f(theta).abs() })
        }
        LoopSpec::Rrrr(l) => {
            let f = |phi: f64| norm(sub(rrrr_vertices(l, known, phi)[2], l.v3)) - l.l23;
            let roots = scan_roots(f).into_iter().filter(|phi| simple_ccw(&rrrr_vertices(l, known, *phi))).collect();
            let phi = pick_one(roots)?;
            let vs = rrrr_vertices(l, known, phi);
            let interior_angles = [
                interior(vs[3], vs[0], vs[1]),
                interior(vs[0], vs[1], vs[2]),
                interior(vs[1], vs[2], vs[3]),
                interior(vs[2], vs[3], vs[0]),
            ];
            Ok(OracleSolution::Rrrr { vertices: vs, interior: interior_angles, residual: f(phi).abs() })
        }
    }
}

/// Joint angles of a digit obtained purely from the numeric loop closures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleJoints {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: Option<f64>,
    pub d1: f64,
    /// Interior angles `[P, Q, R, J]` of the intermediate loop.
    pub intermediate: [f64; 4],
    /// Interior angles `[K, S, T, U]` of the distal loop.
    pub distal: Option<[f64; 4]>,
    /// Intermediate-loop vertices `[P, Q, R, J]` in the proximal-phalanx frame.
    pub intermediate_vertices: [V2; 4],
    pub max_residual: f64,
}

/// Solves every loop of a digit with the numeric oracle.
pub fn oracle_solve(
    model: &DigitModel,
    virt: &VirtualLinks,
    frame: &SensorFrame,
) -> Result<OracleJoints, KinematicsError> {
    let g = &model.geom;
    let prox = RrprLoop { anchor: [virt.x1(), virt.y1()], b1: g.b1, c1: virt.c1() };
    let (theta1, d1, r1) = match loop_closure_oracle(&LoopSpec::Rrpr(prox), frame.alpha2)? {
        OracleSolution::Rrpr { theta, d1, residual } => (theta, d1, residual),
        _ => unreachable!(),
    };

    let b2 = virt.x3().hypot(virt.y3());
    let beta6 = virt.y3().atan2(virt.x3());
    let int = RrrrLoop { v0: [d1, -virt.c1()], v3: [virt.l1(), 0.0], l01: g.d2, l12: g.a2, l23: b2 };
    let (vs, int_angles, r2) = match loop_closure_oracle(&LoopSpec::Rrrr(int), frame.beta2)? {
        OracleSolution::Rrrr { vertices, interior, residual } => (vertices, interior, residual),
        _ => unreachable!(),
    };
    let theta2 = wrap_pi(angle_of(sub(vs[2], vs[3])) + beta6);

    let (theta3, distal, r3) = if model.digit.is_thumb() {
        let d = g.distal()?;
        let gamma2 = frame.gamma2.ok_or(KinematicsError::MissingSensor("gamma2"))?;
        let (x4, y4) = match (virt.x4(), virt.y4()) {
            (Some(x), Some(y)) => (x, y),
            _ => return Err(KinematicsError::MissingIntermediate("x4/y4")),
        };
        let k = [-d.c3 * d.gamma1.cos(), -d.c3 * d.gamma1.sin()];
        let dl = RrrrLoop { v0: k, v3: [0.0, 0.0], l01: d.d3, l12: d.a3, l23: x4.hypot(y4) };
        let (dvs, d_angles, r) = match loop_closure_oracle(&LoopSpec::Rrrr(dl), gamma2)? {
            OracleSolution::Rrrr { vertices, interior, residual } => (vertices, interior, residual),
            _ => unreachable!(),
        };
        let theta3 = wrap_pi(angle_of(sub(dvs[2], dvs[3])) + y4.atan2(x4));
        (Some(theta3), Some(d_angles), r)
    } else {
        (None, None, 0.0)
    };

    Ok(OracleJoints {
        theta1: wrap_pi(theta1),
        theta2,
        theta3,
        d1,
        intermediate: int_angles,
        distal,
        intermediate_vertices: vs,
        max_residual: r1.max(r2).max(r3),
    })
}
