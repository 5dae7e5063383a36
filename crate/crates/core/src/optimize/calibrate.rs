use std::f64::consts::{FRAC_PI_2, TAU};

use crate::error::OptimizeError;
use crate::ld::LdSolver;
use crate::model::{PulseShape, ValidatedConfig};

/// Rescale `omega_peak` so the φ₀-averaged LD entangling phase is ±π/2.
///
/// The probe runs at the reference drive `Ω_ref = 2π/t_g`; a phase below
/// 1e-12 rad there means the pulse has no differential drive.
pub fn calibrate_phase(pulse: &PulseShape, config: &ValidatedConfig) -> Result<PulseShape, OptimizeError> {
    let cfg = config.with_pulse(pulse.clone())?;
    let solver = LdSolver::new(&cfg);
    let omega_ref = TAU / cfg.gate_time();
    let phase_ref = solver.mean_entangling_phase(omega_ref);
    if !(phase_ref.abs() >= 1e-12) {
        return Err(OptimizeError::NoDifferentialDrive { phase: phase_ref });
    }
    let mut omega = omega_ref * (FRAC_PI_2 / phase_ref.abs()).sqrt();
    // Newton polish on |Φ(Ω)| − π/2 with dΦ/dΩ = 2Φ/Ω.
    for _ in 0..2 {
        let phase = solver.mean_entangling_phase(omega).abs();
        let step = (phase - FRAC_PI_2) / (2.0 * phase / omega);
        omega -= step;
        if step.abs() <= 1e-15 * omega {
            break;
        }
    }
    Ok(pulse.with_omega_peak(omega))
}

/// Rescale `omega_peak` of an already validated config.
pub fn calibrate_config(config: &ValidatedConfig) -> Result<ValidatedConfig, OptimizeError> {
    let pulse = calibrate_phase(&config.pulse, config)?;
    Ok(config.with_omega_peak(pulse.omega_peak))
}
