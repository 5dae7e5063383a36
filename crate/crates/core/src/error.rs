use std::path::PathBuf;

use thiserror::Error;

/// Invalid or unreadable configuration. Every variant names the offending field or file.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },

    #[error("{what} = {value:e} outside [{min:e}, {max:e}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("reading {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parsing {}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
}

impl ConfigError {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

/// Numerical failures of the solvers (grid and step audits).
#[derive(Debug, Error)]
pub enum SolverError {
    #[error(
        "grid too small: boundary leakage {leakage:.3e} exceeds {limit:.1e} \
         (grid {points:?} points, extents {extent:?} ground-state widths)"
    )]
    GridTooSmall {
        leakage: f64,
        limit: f64,
        points: [usize; 2],
        extent: [f64; 2],
    },

    #[error("time step audit failed: {0}")]
    StepAudit(String),

    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("no differential drive: entangling phase {phase:e} rad at unit amplitude")]
    NoDifferentialDrive { phase: f64 },

    #[error("invalid search space: {0}")]
    Space(String),

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Error)]
pub enum WaveformError {
    #[error("edge time {edge:e} s is shorter than two sample periods ({min:e} s)")]
    EdgeTooShort { edge: f64, min: f64 },

    #[error("transfer curve: {0}")]
    BadCurve(String),

    #[error("unreachable amplitude {requested} (curve spans [{min}, {max}])")]
    UnreachableAmplitude { requested: f64, min: f64, max: f64 },

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("stream format: {0}")]
    Format(String),

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
