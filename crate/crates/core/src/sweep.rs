//! Parallel one-parameter sweeps with input-ordered output.

use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::GateConfig;
use crate::error::{ConfigError, OptimizeError};
use crate::full::curve::{rectangular_point, CurveOptions, CurvePoint, CurveSolver, RectangularFamily};
use crate::full::full_gate_error;
use crate::ld::ld_gate_error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Rectangular pulse of each length, minimized over (Ω, ν).
    GateTime,
    Nu,
    OmegaPeak,
    EtaC,
    FC,
    EdgeTime,
}

impl SweepParam {
    pub const NAMES: [&'static str; 6] = ["gate_time", "nu", "omega_peak", "eta_c", "f_c", "edge_time"];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::GateTime => "gate_time",
            SweepParam::Nu => "nu",
            SweepParam::OmegaPeak => "omega_peak",
            SweepParam::EtaC => "eta_c",
            SweepParam::FC => "f_c",
            SweepParam::EdgeTime => "edge_time",
        }
    }
}

impl FromStr for SweepParam {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "gate_time" | "t_g" => SweepParam::GateTime,
            "nu" => SweepParam::Nu,
            "omega_peak" => SweepParam::OmegaPeak,
            "eta_c" => SweepParam::EtaC,
            "f_c" => SweepParam::FC,
            "edge_time" => SweepParam::EdgeTime,
            other => {
                return Err(ConfigError::invalid(
                    "param",
                    format!("unknown sweep parameter '{other}' (expected one of {:?})", Self::NAMES),
                ))
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub solver: CurveSolver,
    /// Worker threads; 0 uses the rayon default.
    pub parallel: usize,
    pub curve: CurveOptions,
}

/// One sweep row; `failure` replaces the figures when the point failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    #[serde(flatten)]
    pub point: CurvePoint,
}

fn evaluate(template: &GateConfig, spec: &SweepSpec, value: f64) -> CurvePoint {
    let mut cfg = template.clone();
    match spec.param {
        SweepParam::GateTime => {
            let family = RectangularFamily {
                trap: cfg.trap,
                coupling: cfg.coupling,
                sim: cfg.sim,
            };
            let opts = CurveOptions {
                solver: spec.solver,
                ..spec.curve.clone()
            };
            return rectangular_point(&family, value, &opts);
        }
        SweepParam::Nu => cfg.pulse.nu = value,
        SweepParam::OmegaPeak => {
            cfg.pulse.omega_peak = value;
            cfg.calibrate_omega = false;
        }
        SweepParam::EtaC => cfg.trap.eta_c = value,
        SweepParam::FC => cfg.trap.f_c = value,
        SweepParam::EdgeTime => cfg.pulse.edge_time = value,
    }
    let gate_time = cfg.pulse.gate_time();
    let run = || -> Result<CurvePoint, OptimizeError> {
        let v = cfg.prepared()?;
        let ld = ld_gate_error(&v).bell_error;
        let error = match spec.solver {
            CurveSolver::Ld => ld,
            CurveSolver::Full => full_gate_error(&v)?.bell_error,
        };
        Ok(CurvePoint {
            gate_time: v.gate_time(),
            error: Some(error),
            ld_error: Some(ld),
            nu: Some(v.pulse.nu),
            omega_peak: Some(v.pulse.omega_peak),
            failure: None,
        })
    };
    run().unwrap_or_else(|e| CurvePoint {
        gate_time,
        error: None,
        ld_error: None,
        nu: None,
        omega_peak: None,
        failure: Some(e.to_string()),
    })
}

/// Evaluate every value independently; rows come back in input order.
pub fn run_sweep(template: &GateConfig, spec: &SweepSpec) -> Result<Vec<SweepRow>, ConfigError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.parallel)
        .build()
        .map_err(|e| ConfigError::invalid("parallel", e.to_string()))?;
    Ok(pool.install(|| {
        spec.values
            .par_iter()
            .map(|&v| SweepRow {
                value: v,
                point: evaluate(template, spec, v),
            })
            .collect()
    }))
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV with columns `<param>, t_g, error, ld_error, nu, omega_peak, failure`.
pub fn write_csv<W: Write>(rows: &[SweepRow], param: SweepParam, w: W) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([param.name(), "t_g", "error", "ld_error", "nu", "omega_peak", "failure"])?;
    for r in rows {
        out.write_record([
            r.value.to_string(),
            r.point.gate_time.to_string(),
            cell(r.point.error),
            cell(r.point.ld_error),
            cell(r.point.nu),
            cell(r.point.omega_peak),
            r.point.failure.clone().unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn template() -> GateConfig {
        let mut g = GateConfig::from_config(&presets::high_fidelity());
        g.calibrate_omega = true;
        g
    }

    fn spec(values: Vec<f64>, parallel: usize) -> SweepSpec {
        SweepSpec {
            param: SweepParam::Nu,
            values,
            solver: CurveSolver::Ld,
            parallel,
            curve: CurveOptions::default(),
        }
    }

    #[test]
    fn single_value_single_row() {
        let rows = run_sweep(&template(), &spec(vec![2.6301e6], 1)).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].point.error.unwrap() < 1e-3);
    }

    #[test]
    fn thread_count_does_not_change_bytes() {
        let values: Vec<f64> = (0..12).map(|i| 2.55e6 + 1.5e4 * i as f64).collect();
        let csv_for = |k| {
            let rows = run_sweep(&template(), &spec(values.clone(), k)).unwrap();
            let mut buf = Vec::new();
            write_csv(&rows, SweepParam::Nu, &mut buf).unwrap();
            buf
        };
        assert_eq!(csv_for(1), csv_for(4));
    }

    #[test]
    fn failures_are_recorded_and_run_continues() {
        let rows = run_sweep(&template(), &spec(vec![-1.0, 2.6301e6], 2)).unwrap();
        assert!(rows[0].point.failure.is_some());
        assert!(rows[1].point.error.is_some());
    }

    #[test]
    fn unknown_parameter() {
        assert!("bogus".parse::<SweepParam>().is_err());
        assert_eq!("t_g".parse::<SweepParam>().unwrap(), SweepParam::GateTime);
    }
}
