//! TOML configuration files and content hashing.
//!
//! ```toml
//! calibrate_omega = true
//!
//! [trap]
//! f_c = 1.9243e6
//! eta_c = 0.126
//!
//! [pulse]
//! symmetric = true
//! edge_time = 5e-9
//! omega_peak = 1.5e7
//! nu = 2.6301e6
//! segments = [
//!   { duration = 82.1e-9, amplitude = 0.445 },
//!   { duration = 299.9e-9, amplitude = 0.838 },
//!   { duration = 819.5e-9, amplitude = 1.0 },
//! ]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::budget::BudgetSettings;
use crate::error::{ConfigError, OptimizeError};
use crate::model::{PulseShape, SimOptions, SpinCoupling, TrapSpec, ValidatedConfig};
use crate::optimize::calibrate_config;

/// One gate configuration as stored on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateConfig {
    /// Rescale `omega_peak` to |Φ| = π/2 (LD model) before use.
    #[serde(default)]
    pub calibrate_omega: bool,
    pub trap: TrapSpec,
    pub pulse: PulseShape,
    #[serde(default)]
    pub coupling: SpinCoupling,
    #[serde(default)]
    pub sim: SimOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<BudgetSettings>,
}

impl GateConfig {
    pub fn from_config(config: &ValidatedConfig) -> Self {
        GateConfig {
            calibrate_omega: false,
            trap: config.trap.clone(),
            pulse: config.pulse.clone(),
            coupling: config.coupling,
            sim: config.options.clone(),
            budget: None,
        }
    }

    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, path)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes to TOML")
    }

    /// Check every invariant without calibrating.
    pub fn validated(&self) -> Result<ValidatedConfig, ConfigError> {
        ValidatedConfig::new(
            self.trap.clone(),
            self.pulse.clone(),
            self.coupling,
            self.sim.clone(),
        )
    }

    /// Validate, then calibrate `omega_peak` when requested.
    pub fn prepared(&self) -> Result<ValidatedConfig, OptimizeError> {
        let cfg = self.validated()?;
        if self.calibrate_omega {
            calibrate_config(&cfg)
        } else {
            Ok(cfg)
        }
    }
}

#[derive(Serialize)]
struct HashView<'a> {
    trap: &'a TrapSpec,
    pulse: &'a PulseShape,
    coupling: &'a SpinCoupling,
    sim: &'a SimOptions,
}

/// Hex SHA-256 of the canonical JSON form of the physical configuration.
pub fn config_hash(config: &ValidatedConfig) -> String {
    let view = HashView {
        trap: &config.trap,
        pulse: &config.pulse,
        coupling: &config.coupling,
        sim: &config.options,
    };
    hex::encode(sha256_json(&view))
}

/// SHA-256 of the canonical JSON form of a pulse.
pub fn pulse_hash(pulse: &PulseShape) -> [u8; 32] {
    sha256_json(pulse)
}

pub(crate) fn sha256_json<T: Serialize>(value: &T) -> [u8; 32] {
    let json = serde_json::to_vec(value).expect("value serializes to JSON");
    Sha256::digest(&json).into()
}
