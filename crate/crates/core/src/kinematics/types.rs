use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::KinematicsError;

/// Which digit a model or recording belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DigitKind {
    Thumb,
    Index,
    Middle,
}

impl DigitKind {
    pub const ALL: [DigitKind; 3] = [DigitKind::Thumb, DigitKind::Index, DigitKind::Middle];

    pub fn is_thumb(self) -> bool {
        matches!(self, DigitKind::Thumb)
    }

    /// Number of calibratable virtual-link coordinates.
    pub fn n_params(self) -> usize {
        if self.is_thumb() {
            8
        } else {
            6
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DigitKind::Thumb => "thumb",
            DigitKind::Index => "index",
            DigitKind::Middle => "middle",
        }
    }
}

impl fmt::Display for DigitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DigitKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "thumb" => Ok(DigitKind::Thumb),
            "index" => Ok(DigitKind::Index),
            "middle" => Ok(DigitKind::Middle),
            other => Err(format!("unknown digit '{other}' (expected thumb, index or middle)")),
        }
    }
}

/// Hardware geometry of the distal (thumb-only) loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistalFixed {
    pub a3: f64,
    pub c3: f64,
    pub d3: f64,
    /// Radians.
    pub gamma1: f64,
}

/// Exoskeleton link lengths that do not change between users.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedGeometry {
    pub b1: f64,
    pub a2: f64,
    pub d2: f64,
    pub distal: Option<DistalFixed>,
}

impl FixedGeometry {
    pub fn validate(&self, digit: DigitKind) -> Result<(), KinematicsError> {
        let bad = |what: &str| Err(KinematicsError::InvalidGeometry(what.to_string()));
        for (name, v) in [("b1", self.b1), ("a2", self.a2), ("d2", self.d2)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(&format!("{name} must be a positive length, got {v}"));
            }
        }
        match (digit.is_thumb(), &self.distal) {
            (true, None) => bad("thumb geometry needs the distal loop (a3, c3, d3, gamma1)"),
            (false, Some(_)) => bad("finger geometry must not carry a distal loop"),
            (true, Some(d)) => {
                for (name, v) in [("a3", d.a3), ("c3", d.c3), ("d3", d.d3)] {
                    if !(v.is_finite() && v > 0.0) {
                        return bad(&format!("{name} must be a positive length, got {v}"));
                    }
                }
                if !(d.gamma1 > 0.0 && d.gamma1 < std::f64::consts::PI) {
                    return bad(&format!("gamma1 must lie in (0, pi), got {}", d.gamma1));
                }
                Ok(())
            }
            (false, None) => Ok(()),
        }
    }

    pub fn distal(&self) -> Result<&DistalFixed, KinematicsError> {
        self.distal.as_ref().ok_or(KinematicsError::WrongDigit)
    }
}

/// One calibratable virtual-link coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamId {
    X1,
    Y1,
    X2,
    Y2,
    X3,
    Y3,
    X4,
    Y4,
}

impl ParamId {
    pub const ALL: [ParamId; 8] =
        [ParamId::X1, ParamId::Y1, ParamId::X2, ParamId::Y2, ParamId::X3, ParamId::Y3, ParamId::X4, ParamId::Y4];

    pub fn for_digit(digit: DigitKind) -> &'static [ParamId] {
        &Self::ALL[..digit.n_params()]
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        ["x1", "y1", "x2", "y2", "x3", "y3", "x4", "y4"][self.index()]
    }
}

impl fmt::Display for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParamId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ParamId::ALL
            .iter()
            .copied()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown parameter '{s}'"))
    }
}

/// Calibratable anchor coordinates in XY form (mm).
///
/// `x1, y1` locate the proximal exoskeleton pivot relative to the MCP (thumb: CMC)
/// joint, `x2` is the proximal phalanx length `L1`, `y2` the cuff offset `c1`,
/// `x3, y3` the intermediate cuff on the next phalanx and, for the thumb,
/// `x4, y4` the distal cuff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirtualLinks {
    values: [f64; 8],
    len: usize,
}

impl VirtualLinks {
    pub fn finger(x1: f64, y1: f64, x2: f64, y2: f64, x3: f64, y3: f64) -> Self {
        VirtualLinks { values: [x1, y1, x2, y2, x3, y3, 0.0, 0.0], len: 6 }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn thumb(x1: f64, y1: f64, x2: f64, y2: f64, x3: f64, y3: f64, x4: f64, y4: f64) -> Self {
        VirtualLinks { values: [x1, y1, x2, y2, x3, y3, x4, y4], len: 8 }
    }

    /// Builds from a 6- or 8-element slice.
    pub fn from_slice(v: &[f64]) -> Result<Self, KinematicsError> {
        match v.len() {
            6 => Ok(Self::finger(v[0], v[1], v[2], v[3], v[4], v[5])),
            8 => Ok(Self::thumb(v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7])),
            n => Err(KinematicsError::InvalidGeometry(format!("virtual links need 6 or 8 coordinates, got {n}"))),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values[..self.len]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn has_distal(&self) -> bool {
        self.len == 8
    }

    pub fn get(&self, p: ParamId) -> Option<f64> {
        (p.index() < self.len).then(|| self.values[p.index()])
    }

    /// Returns a copy with one coordinate replaced.
    pub fn with(&self, p: ParamId, value: f64) -> Self {
        let mut out = *self;
        assert!(p.index() < self.len, "parameter {p} not present");
        out.values[p.index()] = value;
        out
    }

    /// Multiplies every coordinate by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = *self;
        for v in &mut out.values[..self.len] {
            *v *= s;
        }
        out
    }

    pub fn x1(&self) -> f64 {
        self.values[0]
    }
    pub fn y1(&self) -> f64 {
        self.values[1]
    }
    /// Proximal phalanx length `L1`.
    pub fn l1(&self) -> f64 {
        self.values[2]
    }
    /// Cuff offset `c1`.
    pub fn c1(&self) -> f64 {
        self.values[3]
    }
    pub fn x3(&self) -> f64 {
        self.values[4]
    }
    pub fn y3(&self) -> f64 {
        self.values[5]
    }
    pub fn x4(&self) -> Option<f64> {
        self.get(ParamId::X4)
    }
    pub fn y4(&self) -> Option<f64> {
        self.get(ParamId::Y4)
    }

    pub fn check_digit(&self, digit: DigitKind) -> Result<(), KinematicsError> {
        if self.len != digit.n_params() {
            return Err(KinematicsError::InvalidGeometry(format!(
                "{digit} needs {} virtual coordinates, got {}",
                digit.n_params(),
                self.len
            )));
        }
        Ok(())
    }

    /// Checks the structural invariants (positive derived lengths, `c1 > 0`, `L1 > 0`).
    pub fn validate(&self) -> Result<(), KinematicsError> {
        let bad = |s: String| Err(KinematicsError::InvalidGeometry(s));
        if self.as_slice().iter().any(|v| !v.is_finite()) {
            return bad("virtual links must be finite".into());
        }
        if self.c1() <= 0.0 {
            return bad(format!("y2 (cuff offset c1) must be positive, got {}", self.c1()));
        }
        if self.l1() <= 0.0 {
            return bad(format!("x2 (phalanx length L1) must be positive, got {}", self.l1()));
        }
        if self.x1().hypot(self.y1()) <= 0.0 || self.x3().hypot(self.y3()) <= 0.0 {
            return bad("a1 and b2 must be positive".into());
        }
        if let (Some(x4), Some(y4)) = (self.x4(), self.y4()) {
            if x4.hypot(y4) <= 0.0 {
                return bad("b3 must be positive".into());
            }
        }
        Ok(())
    }

    pub fn to_length_angle(&self) -> Result<LengthAngle, KinematicsError> {
        let (a1, alpha1) = xy_to_length_angle(self.x1(), self.y1())?;
        let (b2, beta6) = xy_to_length_angle(self.x3(), self.y3())?;
        let distal = match (self.x4(), self.y4()) {
            (Some(x), Some(y)) => Some(xy_to_length_angle(x, y)?),
            _ => None,
        };
        Ok(LengthAngle { a1, alpha1, c1: self.c1(), l1: self.l1(), b2, beta6, distal })
    }
}

/// Length–angle form of [`VirtualLinks`]; the form used by the closed-form solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthAngle {
    pub a1: f64,
    pub alpha1: f64,
    pub c1: f64,
    pub l1: f64,
    pub b2: f64,
    pub beta6: f64,
    /// `(b3, gamma6)` for the thumb.
    pub distal: Option<(f64, f64)>,
}

impl LengthAngle {
    pub fn to_xy(&self) -> VirtualLinks {
        let (x1, y1) = length_angle_to_xy(self.a1, self.alpha1);
        let (x3, y3) = length_angle_to_xy(self.b2, self.beta6);
        match self.distal {
            Some((b3, g6)) => {
                let (x4, y4) = length_angle_to_xy(b3, g6);
                VirtualLinks::thumb(x1, y1, self.l1, self.c1, x3, y3, x4, y4)
            }
            None => VirtualLinks::finger(x1, y1, self.l1, self.c1, x3, y3),
        }
    }
}

/// `(x, y) -> (length, angle)`.
pub fn xy_to_length_angle(x: f64, y: f64) -> Result<(f64, f64), KinematicsError> {
    if x == 0.0 && y == 0.0 {
        return Err(KinematicsError::ZeroVector);
    }
    Ok((x.hypot(y), y.atan2(x)))
}

/// `(length, angle) -> (x, y)`.
pub fn length_angle_to_xy(length: f64, angle: f64) -> (f64, f64) {
    let (s, c) = angle.sin_cos();
    (length * c, length * s)
}

/// One timestamped sample of the exoskeleton sensors of a digit (radians).
///
/// Fingers carry `delta2`; the thumb carries `gamma2` and usually `delta3`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SensorFrame {
    pub t: f64,
    pub alpha2: f64,
    pub beta2: f64,
    pub gamma2: Option<f64>,
    pub delta1: f64,
    pub delta2: Option<f64>,
    pub delta3: Option<f64>,
}

impl SensorFrame {
    pub fn is_finite(&self) -> bool {
        [self.t, self.alpha2, self.beta2, self.delta1].iter().all(|v| v.is_finite())
            && [self.gamma2, self.delta2, self.delta3].iter().flatten().all(|v| v.is_finite())
    }
}

/// Anatomical joint angles and loop intermediates produced by the forward solve.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointEstimate {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: Option<f64>,
    pub dip: Option<f64>,
    pub d1: f64,
    pub alpha3: f64,
    pub c2: f64,
    pub beta1: f64,
    pub beta3: f64,
    pub beta4: f64,
    pub beta5: f64,
    pub beta6: f64,
    pub gamma1: Option<f64>,
    pub gamma3: Option<f64>,
    pub gamma5: Option<f64>,
}

/// Fingertip position in the planar digit frame (mm); flexion moves it toward `-y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FingertipPose {
    pub x: f64,
    pub y: f64,
}

impl FingertipPose {
    pub fn distance(&self, other: &FingertipPose) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}
