//! Error-versus-gate-time curves.
//!
//! For rectangular pulses every point is minimized over (Ω, ν): a dense LD
//! scan of ν (Ω calibrated in closed form) finds the candidate minima, which
//! are then refined with the chosen solver.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{OptimizeError, SolverError};
use crate::ld::ld_gate_error;
use crate::model::{PulseShape, SimOptions, SpinCoupling, TrapSpec, ValidatedConfig};
use crate::optimize::{golden_section, ld_score};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveSolver {
    Ld,
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurveOptions {
    pub edge_time: f64,
    /// ν scan range in units of f_c.
    pub nu_range: [f64; 2],
    pub nu_points: usize,
    /// Distinct LD minima carried into refinement.
    pub candidates: usize,
    pub solver: CurveSolver,
    /// φ₀ samples used while refining with the full solver.
    pub phi0_points: usize,
    /// Full-solver runs per candidate.
    pub full_evaluations: usize,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions {
            edge_time: 5e-9,
            nu_range: [1.001, 4.0],
            nu_points: 1500,
            candidates: 2,
            solver: CurveSolver::Full,
            phi0_points: 8,
            full_evaluations: 20,
        }
    }
}

/// One point of a curve; `failure` is set instead of the figures on error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub gate_time: f64,
    pub error: Option<f64>,
    pub ld_error: Option<f64>,
    pub nu: Option<f64>,
    pub omega_peak: Option<f64>,
    pub failure: Option<String>,
}

impl CurvePoint {
    fn failed(gate_time: f64, reason: String) -> Self {
        CurvePoint {
            gate_time,
            error: None,
            ld_error: None,
            nu: None,
            omega_peak: None,
            failure: Some(reason),
        }
    }
}

/// Template shared by every point of a rectangular curve.
#[derive(Clone, Debug, PartialEq)]
pub struct RectangularFamily {
    pub trap: TrapSpec,
    pub coupling: SpinCoupling,
    pub sim: SimOptions,
}

impl RectangularFamily {
    fn config(&self, gate_time: f64, nu: f64, edge: f64) -> Result<ValidatedConfig, OptimizeError> {
        Ok(ValidatedConfig::new(
            self.trap.clone(),
            PulseShape::rectangular(gate_time, edge, 1.0, nu),
            self.coupling,
            self.sim.clone(),
        )?)
    }

    /// LD error at ν with Ω calibrated; `None` when the pulse has no drive.
    fn ld_at(&self, gate_time: f64, nu: f64, edge: f64) -> Option<(f64, ValidatedConfig)> {
        let cfg = self.config(gate_time, nu, edge).ok()?;
        ld_score(&cfg).ok().map(|s| (s.error, s.config))
    }
}

/// Indices of the `count` lowest local minima of `values`, best first.
fn local_minima(values: &[f64], count: usize) -> Vec<usize> {
    let n = values.len();
    let mut minima: Vec<usize> = (0..n)
        .filter(|&i| {
            let left = i == 0 || values[i - 1] >= values[i];
            let right = i + 1 == n || values[i + 1] > values[i];
            left && right && values[i].is_finite()
        })
        .collect();
    minima.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    minima.truncate(count);
    minima
}

/// Minimum error over (Ω, ν) for a rectangular pulse of length `gate_time`.
pub fn rectangular_point(family: &RectangularFamily, gate_time: f64, opts: &CurveOptions) -> CurvePoint {
    match rectangular_point_inner(family, gate_time, opts) {
        Ok(p) => p,
        Err(e) => CurvePoint::failed(gate_time, e.to_string()),
    }
}

fn rectangular_point_inner(
    family: &RectangularFamily,
    gate_time: f64,
    opts: &CurveOptions,
) -> Result<CurvePoint, OptimizeError> {
    if !(gate_time > 2.0 * opts.edge_time) {
        return Err(OptimizeError::Space(format!(
            "gate time {gate_time:e} s is shorter than twice the edge time"
        )));
    }
    let f_c = family.trap.f_c;
    let [lo, hi] = opts.nu_range;
    let n = opts.nu_points.max(3);
    let step = (hi - lo) / n as f64;
    let nus: Vec<f64> = (0..n).map(|i| f_c * (lo + step * (i as f64 + 0.5))).collect();
    let scan: Vec<f64> = nus
        .iter()
        .map(|&nu| family.ld_at(gate_time, nu, opts.edge_time).map_or(f64::INFINITY, |(e, _)| e))
        .collect();
    let starts = local_minima(&scan, opts.candidates.max(1));
    if starts.is_empty() {
        return Err(OptimizeError::NoDifferentialDrive { phase: 0.0 });
    }

    let mut best: Option<CurvePoint> = None;
    for i in starts {
        let half = f_c * step;
        let (nu, _, _) = golden_section(
            |nu| {
                Ok::<_, OptimizeError>(
                    family
                        .ld_at(gate_time, nu, opts.edge_time)
                        .map_or(f64::INFINITY, |(e, _)| e),
                )
            },
            nus[i] - half,
            nus[i] + half,
            30,
        )?;
        let (ld_error, cfg) = family
            .ld_at(gate_time, nu, opts.edge_time)
            .ok_or(OptimizeError::NoDifferentialDrive { phase: 0.0 })?;
        let point = match opts.solver {
            CurveSolver::Ld => CurvePoint {
                gate_time,
                error: Some(ld_error),
                ld_error: Some(ld_error),
                nu: Some(nu),
                omega_peak: Some(cfg.pulse.omega_peak),
                failure: None,
            },
            CurveSolver::Full => refine_rectangular(&cfg, ld_error, opts)?,
        };
        let better = match &best {
            None => true,
            Some(b) => point.error.unwrap_or(f64::INFINITY) < b.error.unwrap_or(f64::INFINITY),
        };
        if better {
            best = Some(point);
        }
    }
    Ok(best.expect("at least one start"))
}

fn refine_rectangular(cfg: &ValidatedConfig, ld_error: f64, opts: &CurveOptions) -> Result<CurvePoint, OptimizeError> {
    let coarse = cfg.with_options(SimOptions {
        phi0_grid_size: opts.phi0_points.max(2),
        ..cfg.options.clone()
    })?;
    let (cal, used) = super::calibrate_full_omega_within(&coarse, opts.phi0_points, 3, 1e-4)?;
    let mut pulse = cal.pulse.clone();
    let eval = |p: &PulseShape| -> Result<f64, SolverError> { Ok(super::full_gate_error(&coarse.with_pulse(p.clone())?)?.bell_error) };
    let stage = opts.full_evaluations.saturating_sub(used + 1) / 2;
    if stage >= 3 {
        let nu0 = pulse.nu;
        let (nu, _, _) = golden_section(|nu| eval(&pulse.with_nu(nu)), 0.997 * nu0, 1.003 * nu0, stage)?;
        pulse = pulse.with_nu(nu);
        let om0 = pulse.omega_peak;
        let (om, _, _) = golden_section(|om| eval(&pulse.with_omega_peak(om)), 0.97 * om0, 1.03 * om0, stage)?;
        pulse = pulse.with_omega_peak(om);
    }
    let final_cfg = cfg.with_pulse(pulse)?;
    let full = super::full_gate_error(&final_cfg)?;
    let err = full.bell_error;
    // The LD-calibrated starting point is kept when refinement did not help.
    let (error, nu, omega) = {
        let start = super::full_gate_error(cfg)?.bell_error;
        if start < err {
            (start, cfg.pulse.nu, cfg.pulse.omega_peak)
        } else {
            (err, final_cfg.pulse.nu, final_cfg.pulse.omega_peak)
        }
    };
    Ok(CurvePoint {
        gate_time: cfg.gate_time(),
        error: Some(error),
        ld_error: Some(ld_error),
        nu: Some(nu),
        omega_peak: Some(omega),
        failure: None,
    })
}

/// Rectangular-pulse curve; points are evaluated in parallel and returned in
/// input order. Failures are recorded per point.
pub fn error_vs_time_curve(family: &RectangularFamily, gate_times: &[f64], opts: &CurveOptions) -> Vec<CurvePoint> {
    gate_times
        .par_iter()
        .map(|&tg| rectangular_point(family, tg, opts))
        .collect()
}

/// Curve points for already-optimized shaped pulses.
pub fn shaped_curve(configs: &[ValidatedConfig], solver: CurveSolver) -> Vec<CurvePoint> {
    configs
        .par_iter()
        .map(|cfg| {
            let ld = ld_gate_error(cfg).bell_error;
            let error = match solver {
                CurveSolver::Ld => Ok(ld),
                CurveSolver::Full => super::full_gate_error(cfg).map(|r| r.bell_error),
            };
            match error {
                Ok(e) => CurvePoint {
                    gate_time: cfg.gate_time(),
                    error: Some(e),
                    ld_error: Some(ld),
                    nu: Some(cfg.pulse.nu),
                    omega_peak: Some(cfg.pulse.omega_peak),
                    failure: None,
                },
                Err(e) => CurvePoint::failed(cfg.gate_time(), e.to_string()),
            }
        })
        .collect()
}
