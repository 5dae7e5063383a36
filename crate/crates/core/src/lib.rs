//! Simulation and optimization of fast two-ion geometric phase gates driven
//! by amplitude-shaped travelling standing waves.

pub mod budget;
pub mod config;
pub mod error;
pub mod fidelity;
pub mod full;
pub mod ld;
pub mod model;
pub mod optimize;
pub mod presets;
pub mod quad;
pub mod sweep;
pub mod waveform;

pub use error::{ConfigError, OptimizeError, SolverError, WaveformError};
pub use ld::{entangling_phase, ld_gate_error, propagate_ld, LdGateResult, LdTrajectory};
pub use model::{
    validate, Branch, DriveGeometry, Envelope, InitialState, Mode, PulseShape, Segment, SimOptions,
    Spin, SpinCoupling, TrapSpec, ValidatedConfig,
};
