//! Reference gates: the two tabulated stepped pulses and an adiabatic
//! single-pulse gate, each with Ω calibrated to |Φ| = π/2 in the LD model.

use crate::model::{PulseShape, Segment, SimOptions, SpinCoupling, TrapSpec, ValidatedConfig};
use crate::optimize::calibrate_phase;

/// Lamb-Dicke parameter of the COM mode for 90° crossed 397 nm beams.
pub const ETA_C: f64 = 0.126;

/// Edge time programmed on the AWG (s).
pub const EDGE_TIME: f64 = 5.0e-9;

/// 5-segment, 1.59 µs gate with `f_c < ν < f_s`.
pub fn high_fidelity_pulse() -> PulseShape {
    PulseShape {
        segments: vec![
            Segment::new(82.1e-9, 0.445),
            Segment::new(299.9e-9, 0.838),
            Segment::new(819.5e-9, 1.0),
        ],
        symmetric: true,
        edge_time: EDGE_TIME,
        omega_peak: 1.0e7,
        nu: 2.6301e6,
        phi_half: None,
    }
}

pub fn high_fidelity_trap() -> TrapSpec {
    TrapSpec::new(1.9243e6, ETA_C)
}

/// 7-segment, 483 ns gate with `ν > f_s`.
pub fn fastest_pulse() -> PulseShape {
    PulseShape {
        segments: vec![
            Segment::new(71.4e-9, 0.284),
            Segment::new(64.5e-9, 0.617),
            Segment::new(46.7e-9, 0.862),
            Segment::new(112.3e-9, 1.0),
        ],
        symmetric: true,
        edge_time: EDGE_TIME,
        omega_peak: 1.0e8,
        nu: 6.3802e6,
        phi_half: None,
    }
}

pub fn fastest_trap() -> TrapSpec {
    TrapSpec::new(1.8615e6, ETA_C)
}

/// Constant 20 µs pulse with 1 µs edges, detuned by `1/(t_g − t_f)` above the
/// COM mode (ν ≈ 1.027 f_c) so the COM loop closes.
pub fn adiabatic_pulse(f_c: f64) -> PulseShape {
    let (tg, tf) = (20e-6, 1e-6);
    PulseShape::rectangular(tg, tf, 1.0e5, f_c + 1.0 / (tg - tf))
}

fn calibrated(trap: TrapSpec, pulse: PulseShape) -> ValidatedConfig {
    let cfg = ValidatedConfig::new(trap, pulse, SpinCoupling::default(), SimOptions::default())
        .expect("preset is valid");
    let pulse = calibrate_phase(&cfg.pulse, &cfg).expect("preset drives the modes");
    cfg.with_pulse(pulse).expect("calibration keeps validity")
}

pub fn high_fidelity() -> ValidatedConfig {
    calibrated(high_fidelity_trap(), high_fidelity_pulse())
}

pub fn fastest() -> ValidatedConfig {
    calibrated(fastest_trap(), fastest_pulse())
}

pub fn adiabatic() -> ValidatedConfig {
    let trap = TrapSpec::new(1.92e6, ETA_C);
    let pulse = adiabatic_pulse(trap.f_c);
    calibrated(trap, pulse)
}
