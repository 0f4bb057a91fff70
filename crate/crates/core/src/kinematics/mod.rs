//! Closed-loop human–exoskeleton kinematics.

mod closed_form;
mod fingertip;
mod model;
pub mod oracle;
mod redundants;
mod types;

pub use closed_form::{
    solve_distal, solve_distal_with, solve_intermediate, solve_intermediate_with, solve_proximal, solve_proximal_with,
    DistalSolution, IntermediateSolution, ProximalSolution, TableForm, CLAMP_EPS,
};
pub use fingertip::{chain_angles, chain_tip, dip_from_pip, dip_from_pip_ratio, fingertip_fk, DEFAULT_DIP_RATIO};
pub use model::DigitModel;
pub use oracle::{loop_closure_oracle, oracle_solve, LoopSpec, OracleJoints, OracleSolution};
pub use redundants::{predict_redundants, Redundants};
pub use types::{
    length_angle_to_xy, xy_to_length_angle, DigitKind, DistalFixed, FingertipPose, FixedGeometry, JointEstimate,
    LengthAngle, ParamId, SensorFrame, VirtualLinks,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("infeasible {stage} loop: {detail}")]
    InfeasibleLoop { stage: &'static str, detail: String },
    #[error("degenerate configuration: both half-angle arguments vanish")]
    DegenerateConfiguration,
    #[error("operation only applies to the thumb")]
    WrongDigit,
    #[error("missing intermediate value '{0}'")]
    MissingIntermediate(&'static str),
    #[error("missing sensor channel '{0}'")]
    MissingSensor(&'static str),
    #[error("expected 3 phalanx lengths, got {0}")]
    BadPhalanxCount(usize),
    #[error("negative flexion {0} rad")]
    NegativeFlexion(f64),
    #[error("loop has no real assembly")]
    NoAssembly,
    #[error("ambiguous assembly branch: candidates {first} and {second}")]
    AmbiguousBranch { first: f64, second: f64 },
    #[error("zero vector has no angle")]
    ZeroVector,
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
}
