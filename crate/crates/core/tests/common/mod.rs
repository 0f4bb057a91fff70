#![allow(dead_code)]

use exocal_core::config::HandGeometry;
use exocal_core::kinematics::{DigitKind, DigitModel, VirtualLinks};
use exocal_core::simulator::{simulate_session, DigitSession, ProtocolConfig, SyntheticSubject};

pub fn nominal(digit: DigitKind) -> (DigitModel, VirtualLinks) {
    let g = HandGeometry::shipped();
    (g.model(digit).unwrap(), g.nominal_virt(digit).unwrap())
}

pub fn subject(digit: DigitKind, scale: f64, donning_pct: f64, sigma: f64, seed: u64) -> SyntheticSubject {
    let (model, virt) = nominal(digit);
    SyntheticSubject::new(&model, &virt, scale, donning_pct, sigma, seed).unwrap()
}

/// Short protocol that keeps calibration tests fast.
pub fn short_protocol() -> ProtocolConfig {
    ProtocolConfig { rate_hz: 25.0, phase1_s: 0.4, phase2_s: 2.0, task_s: 2.0, ..ProtocolConfig::default() }
}

pub fn session(digit: DigitKind, donning_pct: f64, sigma: f64, seed: u64) -> DigitSession {
    simulate_session(&subject(digit, 1.0, donning_pct, sigma, seed), &short_protocol()).unwrap()
}
