//! Error budget: named components and their linear total.

use std::fmt::Write as _;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::model::ValidatedConfig;
use crate::presets;

/// Raman detuning of the calibration point (Hz).
pub const CALIBRATION_DETUNING: f64 = -800e9;
/// Scattering error of the 1.59 µs gate at the calibration detuning.
pub const CALIBRATION_ERROR: f64 = 6e-4;
/// Heating error per unit `ndot · t_g`.
pub const HEATING_COEFFICIENT: f64 = 0.5;

fn default_detuning() -> f64 {
    CALIBRATION_DETUNING
}

fn default_ndot() -> f64 {
    100.0
}

/// Inputs of the analytic components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSettings {
    /// Raman detuning Δ (Hz); sign ignored.
    #[serde(default = "default_detuning")]
    pub detuning_hz: f64,
    /// COM heating rate (quanta/s).
    #[serde(default = "default_ndot")]
    pub ndot: f64,
    /// Scattering constant `C_sc` (Hz/rad); the calibrated default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_sc: Option<f64>,
}

impl Default for BudgetSettings {
    fn default() -> Self {
        BudgetSettings {
            detuning_hz: default_detuning(),
            ndot: default_ndot(),
            c_sc: None,
        }
    }
}

/// `C_sc` such that the calibrated 1.59 µs stepped gate at Δ = −800 GHz gives 6e-4.
pub fn default_scattering_constant() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| {
        let area = presets::high_fidelity().pulse_area();
        CALIBRATION_ERROR * CALIBRATION_DETUNING.abs() / area
    })
}

/// `C_sc · ∫Ω dt / |Δ|`.
pub fn scattering_component(pulse_area: f64, detuning_hz: f64, c_sc: f64) -> Result<f64, ConfigError> {
    if detuning_hz == 0.0 || !detuning_hz.is_finite() {
        return Err(ConfigError::invalid(
            "budget.detuning_hz",
            format!("must be nonzero and finite, got {detuning_hz}"),
        ));
    }
    if !(pulse_area >= 0.0) {
        return Err(ConfigError::invalid("pulse_area", format!("must be >= 0, got {pulse_area}")));
    }
    Ok(c_sc * pulse_area / detuning_hz.abs())
}

/// `c_h · ṅ · t_g` with `c_h = 1/2`.
pub fn heating_component(gate_time: f64, ndot: f64) -> Result<f64, ConfigError> {
    if !(ndot >= 0.0) || !ndot.is_finite() {
        return Err(ConfigError::invalid("budget.ndot", format!("must be >= 0, got {ndot}")));
    }
    Ok(HEATING_COEFFICIENT * ndot * gate_time)
}

/// `full − ld`, floored at zero.
pub fn out_of_ld_from(full_error: f64, ld_error: f64) -> f64 {
    (full_error - ld_error).max(0.0)
}

/// One budget row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Component {
    Value { value: f64 },
    OutOfScope { note: String },
}

impl Component {
    pub fn value(&self) -> Option<f64> {
        match self {
            Component::Value { value } => Some(*value),
            Component::OutOfScope { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetRow {
    pub name: String,
    pub component: Component,
}

/// Named components and their linear sum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub gate_time: f64,
    pub rows: Vec<BudgetRow>,
    pub total: f64,
    pub scattering_constant: f64,
    pub scattering_constant_source: String,
}

impl ErrorBudget {
    pub fn get(&self, name: &str) -> Option<&Component> {
        self.rows.iter().find(|r| r.name == name).map(|r| &r.component)
    }

    /// Sum of the numeric rows in table order.
    pub fn recompute_total(&self) -> f64 {
        self.rows.iter().filter_map(|r| r.component.value()).sum()
    }
}

/// Solver-derived inputs of a budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionErrors {
    pub full_error: f64,
    pub ld_error: f64,
    /// Mean error increase under timing and amplitude jitter.
    pub sensitivity: f64,
}

pub const CHIRP_NOTE: &str = "out of scope: AOM phase chirp is a hardware measurement";
pub const RADIAL_NOTE: &str = "out of scope: radial mode excitation needs 3D trap data";

pub fn assemble_budget(
    config: &ValidatedConfig,
    solution: &SolutionErrors,
    settings: &BudgetSettings,
) -> Result<ErrorBudget, ConfigError> {
    let (c_sc, source) = match settings.c_sc {
        Some(c) => (c, "configured".to_string()),
        None => (
            default_scattering_constant(),
            "calibrated: 1.59 us stepped gate at -800 GHz gives 6e-4".to_string(),
        ),
    };
    let rows = vec![
        BudgetRow {
            name: "out_of_ld".into(),
            component: Component::Value {
                value: out_of_ld_from(solution.full_error, solution.ld_error),
            },
        },
        BudgetRow {
            name: "scattering".into(),
            component: Component::Value {
                value: scattering_component(config.pulse_area(), settings.detuning_hz, c_sc)?,
            },
        },
        BudgetRow {
            name: "heating".into(),
            component: Component::Value {
                value: heating_component(config.gate_time(), settings.ndot)?,
            },
        },
        BudgetRow {
            name: "timing_amplitude".into(),
            component: Component::Value {
                value: solution.sensitivity.max(0.0),
            },
        },
        BudgetRow {
            name: "chirp_note".into(),
            component: Component::OutOfScope {
                note: CHIRP_NOTE.into(),
            },
        },
        BudgetRow {
            name: "radial_note".into(),
            component: Component::OutOfScope {
                note: RADIAL_NOTE.into(),
            },
        },
    ];
    let mut budget = ErrorBudget {
        gate_time: config.gate_time(),
        rows,
        total: 0.0,
        scattering_constant: c_sc,
        scattering_constant_source: source,
    };
    budget.total = budget.recompute_total();
    Ok(budget)
}

/// Aligned text table.
pub fn render_text(budgets: &[(&str, &ErrorBudget)]) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<18}", "component");
    for (label, _) in budgets {
        let _ = write!(out, " {label:>14}");
    }
    out.push('\n');
    let names: Vec<&str> = budgets
        .first()
        .map(|(_, b)| b.rows.iter().map(|r| r.name.as_str()).collect())
        .unwrap_or_default();
    for name in names {
        let _ = write!(out, "{name:<18}");
        for (_, b) in budgets {
            match b.get(name) {
                Some(Component::Value { value }) => {
                    let _ = write!(out, " {value:>14.2e}");
                }
                _ => {
                    let _ = write!(out, " {:>14}", "out of scope");
                }
            }
        }
        out.push('\n');
    }
    let _ = write!(out, "{:<18}", "total");
    for (_, b) in budgets {
        let _ = write!(out, " {:>14.2e}", b.total);
    }
    out.push('\n');
    out
}
