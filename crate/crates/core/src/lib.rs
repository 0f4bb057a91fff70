//! Kinematic model, calibration and analysis tools for a linkage-based hand exoskeleton.
//!
//! The crate maps sensorized exoskeleton joint angles to anatomical joint angles
//! through closed-form loop solutions, calibrates the subject-specific virtual links
//! from a two-phase protocol, searches cost weights, runs sensitivity sweeps and
//! ships a synthetic hand simulator used as ground truth.

pub mod angles;
pub mod calibration;
pub mod config;
pub mod kinematics;
pub mod seeds;
pub mod sensitivity;
pub mod simulator;
pub mod weight_search;
