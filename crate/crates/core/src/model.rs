//! Domain types shared by every solver: trap geometry, drive geometry, spin
//! coupling, pulse envelopes and the validated configuration built from them.
//!
//! All quantities are SI: frequencies `f_*` and `nu` in Hz, `omega_peak` in
//! rad/s, times in seconds. Motional coordinates are dimensionless,
//! `q = (a + a†)/√2`.

use std::f64::consts::{SQRT_2, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Period of the travelling standing wave for 397 nm beams crossing at 90° (m).
pub const STANDING_WAVE_PERIOD: f64 = 397e-9 / SQRT_2;

/// Axial normal modes of the two-ion crystal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Com,
    Stretch,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::Com, Mode::Stretch];

    pub fn index(self) -> usize {
        match self {
            Mode::Com => 0,
            Mode::Stretch => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Mode::Com => "c",
            Mode::Stretch => "s",
        }
    }
}

fn default_spacing() -> f64 {
    12.5
}

/// Trap and mode geometry of the two-ion crystal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSpec {
    /// Centre-of-mass axial frequency (Hz).
    pub f_c: f64,
    /// Per-ion Lamb-Dicke parameter of the COM mode.
    pub eta_c: f64,
    /// Ion separation in standing-wave periods; must be k + 1/2.
    #[serde(default = "default_spacing")]
    pub spacing_periods: f64,
    #[serde(default)]
    pub nbar_c: f64,
    #[serde(default)]
    pub nbar_s: f64,
}

impl TrapSpec {
    pub fn new(f_c: f64, eta_c: f64) -> Self {
        TrapSpec {
            f_c,
            eta_c,
            spacing_periods: default_spacing(),
            nbar_c: 0.0,
            nbar_s: 0.0,
        }
    }

    /// Stretch-mode frequency, `√3 f_c`.
    pub fn f_s(&self) -> f64 {
        3f64.sqrt() * self.f_c
    }

    /// Stretch-mode Lamb-Dicke parameter, `η_c 3^(-1/4)`.
    pub fn eta_s(&self) -> f64 {
        self.eta_c * 3f64.powf(-0.25)
    }

    pub fn frequency(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Com => self.f_c,
            Mode::Stretch => self.f_s(),
        }
    }

    pub fn angular_frequency(&self, mode: Mode) -> f64 {
        TAU * self.frequency(mode)
    }

    pub fn lamb_dicke(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Com => self.eta_c,
            Mode::Stretch => self.eta_s(),
        }
    }

    pub fn nbar(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Com => self.nbar_c,
            Mode::Stretch => self.nbar_s,
        }
    }
}

/// One constant-amplitude step of a pulse.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    /// Duration between the midpoints of the bounding edges (s).
    pub duration: f64,
    /// Relative amplitude in [0, 1].
    pub amplitude: f64,
}

impl Segment {
    pub fn new(duration: f64, amplitude: f64) -> Self {
        Segment {
            duration,
            amplitude,
        }
    }
}

/// Segmented drive envelope with linear edges.
///
/// When `symmetric` is set, `segments` lists the first half up to and
/// including the centre segment; the remainder is its mirror image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseShape {
    pub segments: Vec<Segment>,
    #[serde(default)]
    pub symmetric: bool,
    /// 0%–100% rise/fall time of every edge (s).
    #[serde(default)]
    pub edge_time: f64,
    /// Peak differential light-shift Rabi frequency (rad/s).
    pub omega_peak: f64,
    /// Raman beat-note frequency (Hz).
    pub nu: f64,
    /// Phase of the closing analysis pulse (rad); optimized when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_half: Option<f64>,
}

impl PulseShape {
    /// Single rectangular pulse of total length `gate_time` (edges included).
    pub fn rectangular(gate_time: f64, edge_time: f64, omega_peak: f64, nu: f64) -> Self {
        PulseShape {
            segments: vec![Segment::new(gate_time - edge_time, 1.0)],
            symmetric: false,
            edge_time,
            omega_peak,
            nu,
            phi_half: None,
        }
    }

    /// The full segment sequence with the mirrored half appended.
    pub fn expanded_segments(&self) -> Vec<Segment> {
        let mut out = self.segments.clone();
        if self.symmetric && self.segments.len() > 1 {
            out.extend(self.segments.iter().rev().skip(1).copied());
        }
        out
    }

    /// Total gate time: sum of expanded durations plus one edge time.
    pub fn gate_time(&self) -> f64 {
        self.expanded_segments().iter().map(|s| s.duration).sum::<f64>() + self.edge_time
    }

    pub fn with_omega_peak(&self, omega_peak: f64) -> Self {
        PulseShape {
            omega_peak,
            ..self.clone()
        }
    }

    pub fn with_nu(&self, nu: f64) -> Self {
        PulseShape { nu, ..self.clone() }
    }

    /// `∫Ω(t) dt` (rad).
    pub fn area(&self) -> f64 {
        self.omega_peak * Envelope::from_segments(&self.expanded_segments(), self.edge_time).area()
    }

    pub fn is_zero(&self) -> bool {
        self.omega_peak == 0.0 || self.segments.iter().all(|s| s.amplitude == 0.0)
    }
}

/// Linear piece of a normalized envelope.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopePiece {
    pub start: f64,
    pub end: f64,
    pub from: f64,
    pub to: f64,
}

impl EnvelopePiece {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn slope(&self) -> f64 {
        (self.to - self.from) / self.len()
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let u = ((t - self.start) / self.len()).clamp(0.0, 1.0);
        self.from + (self.to - self.from) * u
    }
}

/// Piecewise-linear normalized envelope `Ω(t)/Ω_peak` on `[0, t_g]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Envelope {
    pieces: Vec<EnvelopePiece>,
    gate_time: f64,
}

impl Envelope {
    pub fn from_segments(segments: &[Segment], edge_time: f64) -> Envelope {
        let h = 0.5 * edge_time;
        let mut levels = Vec::with_capacity(segments.len() + 2);
        levels.push(0.0);
        levels.extend(segments.iter().map(|s| s.amplitude));
        levels.push(0.0);

        // Edge centres sit at t_f/2 + cumulative durations.
        let mut centres = Vec::with_capacity(segments.len() + 1);
        let mut acc = h;
        centres.push(acc);
        for s in segments {
            acc += s.duration;
            centres.push(acc);
        }

        let mut pieces = Vec::new();
        let mut t = 0.0;
        for (k, &c) in centres.iter().enumerate() {
            let ramp_end = if k == 0 { edge_time } else { c + h };
            if ramp_end > t {
                pieces.push(EnvelopePiece {
                    start: t,
                    end: ramp_end,
                    from: levels[k],
                    to: levels[k + 1],
                });
            }
            t = ramp_end.max(t);
            if let Some(&next) = centres.get(k + 1) {
                let flat_end = next - h;
                if flat_end > t {
                    pieces.push(EnvelopePiece {
                        start: t,
                        end: flat_end,
                        from: levels[k + 1],
                        to: levels[k + 1],
                    });
                    t = flat_end;
                }
            }
        }
        Envelope {
            pieces,
            gate_time: t,
        }
    }

    pub fn pieces(&self) -> &[EnvelopePiece] {
        &self.pieces
    }

    pub fn gate_time(&self) -> f64 {
        self.gate_time
    }

    /// Envelope value with `t` clamped into `[0, t_g]`.
    pub fn value(&self, t: f64) -> f64 {
        if self.pieces.is_empty() {
            return 0.0;
        }
        let idx = self.pieces.partition_point(|p| p.end < t);
        let piece = self.pieces[idx.min(self.pieces.len() - 1)];
        piece.value_at(t)
    }

    /// `∫ envelope dt` (s).
    pub fn area(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| 0.5 * (p.from + p.to) * p.len())
            .sum()
    }

    /// Times at which the envelope slope changes, including 0 and t_g.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.pieces.iter().map(|p| p.start).collect();
        out.push(self.gate_time);
        out
    }
}

/// Qubit state of one ion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spin {
    Down,
    Up,
}

/// Two-ion spin configuration; the σz force leaves each branch invariant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Branch {
    #[serde(rename = "dd")]
    DownDown,
    #[serde(rename = "du")]
    DownUp,
    #[serde(rename = "ud")]
    UpDown,
    #[serde(rename = "uu")]
    UpUp,
}

impl Branch {
    /// Ordered as the computational basis |s1 s2⟩ with ↓ = 0.
    pub const ALL: [Branch; 4] = [Branch::DownDown, Branch::DownUp, Branch::UpDown, Branch::UpUp];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn spins(self) -> [Spin; 2] {
        match self {
            Branch::DownDown => [Spin::Down, Spin::Down],
            Branch::DownUp => [Spin::Down, Spin::Up],
            Branch::UpDown => [Spin::Up, Spin::Down],
            Branch::UpUp => [Spin::Up, Spin::Up],
        }
    }

    /// Branch with both spins flipped.
    pub fn flipped(self) -> Branch {
        match self {
            Branch::DownDown => Branch::UpUp,
            Branch::DownUp => Branch::UpDown,
            Branch::UpDown => Branch::DownUp,
            Branch::UpUp => Branch::DownDown,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Branch::DownDown => "dd",
            Branch::DownUp => "du",
            Branch::UpDown => "ud",
            Branch::UpUp => "uu",
        }
    }
}

/// Light-shift coupling per qubit state; their difference produces the force.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinCoupling {
    pub lambda_down: f64,
    pub lambda_up: f64,
}

impl Default for SpinCoupling {
    fn default() -> Self {
        SpinCoupling {
            lambda_down: 1.0,
            lambda_up: -1.0,
        }
    }
}

impl SpinCoupling {
    pub fn lambda(&self, spin: Spin) -> f64 {
        match spin {
            Spin::Down => self.lambda_down,
            Spin::Up => self.lambda_up,
        }
    }

    pub fn branch_lambdas(&self, branch: Branch) -> [f64; 2] {
        let [a, b] = branch.spins();
        [self.lambda(a), self.lambda(b)]
    }

    /// `λ_↑ = −λ_↓`: flipping both spins is then equivalent to φ₀ → φ₀ + π.
    pub fn is_antisymmetric(&self) -> bool {
        self.lambda_up == -self.lambda_down
    }
}

/// Normal-mode decomposition and standing-wave phases of the two ions.
#[derive(Clone, Debug, PartialEq)]
pub struct DriveGeometry {
    /// Standing-wave phase θ_j⁰ at each ion's equilibrium position.
    pub theta: [f64; 2],
    /// `mode_vectors[j][m]` = b_{j,m}.
    pub mode_vectors: [[f64; 2]; 2],
}

impl DriveGeometry {
    pub fn new(spacing_periods: f64) -> Self {
        let b = 1.0 / SQRT_2;
        DriveGeometry {
            theta: [0.0, TAU * spacing_periods],
            mode_vectors: [[b, b], [b, -b]],
        }
    }

    pub fn b(&self, ion: usize, mode: Mode) -> f64 {
        self.mode_vectors[ion][mode.index()]
    }

    /// Per-ion coupling: ion `j` sees phase `θ_j + κ_{j,m}(a_m + a_m†)`, `κ = √2 b η`.
    pub fn ion_coupling(&self, trap: &TrapSpec, ion: usize, mode: Mode) -> f64 {
        SQRT_2 * self.b(ion, mode) * trap.lamb_dicke(mode)
    }

    /// `e^{iθ_j}` for each ion.
    pub fn phasors(&self) -> [Complex64; 2] {
        [
            Complex64::from_polar(1.0, self.theta[0]),
            Complex64::from_polar(1.0, self.theta[1]),
        ]
    }
}

/// Initial motional state of both modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    Ground,
    /// Coherent amplitudes given as `[re, im]`.
    Coherent { alpha_c: [f64; 2], alpha_s: [f64; 2] },
    /// Thermal state with the trap's `nbar`; the full solver samples
    /// `samples` coherent states from the Glauber P distribution.
    Thermal { samples: usize },
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Ground
    }
}

fn default_phi0_grid() -> usize {
    16
}

fn default_trajectory_samples() -> usize {
    256
}

/// Numerical options shared by the solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimOptions {
    #[serde(default = "default_phi0_grid")]
    pub phi0_grid_size: usize,
    /// Grid points per axis `[com, stretch]`; sized from the LD trajectory when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<[usize; 2]>,
    /// Half-extent per axis in units of q; sized from the LD trajectory when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_extent: Option<[f64; 2]>,
    /// Full-solver time step (s); chosen from the fastest rate when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_step: Option<f64>,
    #[serde(default)]
    pub initial_state: InitialState,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "default_trajectory_samples")]
    pub trajectory_samples: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            phi0_grid_size: default_phi0_grid(),
            grid_points: None,
            grid_extent: None,
            time_step: None,
            initial_state: InitialState::Ground,
            rng_seed: 0,
            trajectory_samples: default_trajectory_samples(),
        }
    }
}

impl SimOptions {
    /// Uniform φ₀ grid on [0, 2π).
    pub fn phi0_grid(&self) -> Vec<f64> {
        uniform_phase_grid(self.phi0_grid_size, 0.0)
    }
}

pub fn uniform_phase_grid(n: usize, offset: f64) -> Vec<f64> {
    (0..n).map(|k| offset + TAU * k as f64 / n as f64).collect()
}

/// Configuration with every invariant checked and derived quantities cached.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidatedConfig {
    pub trap: TrapSpec,
    pub pulse: PulseShape,
    pub coupling: SpinCoupling,
    pub options: SimOptions,
    pub geometry: DriveGeometry,
    envelope: Envelope,
}

/// Validate a trap and pulse with default coupling and options.
pub fn validate(trap: TrapSpec, pulse: PulseShape) -> Result<ValidatedConfig, ConfigError> {
    ValidatedConfig::new(trap, pulse, SpinCoupling::default(), SimOptions::default())
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::invalid(field, format!("must be positive and finite, got {v}")))
    }
}

impl ValidatedConfig {
    pub fn new(
        trap: TrapSpec,
        pulse: PulseShape,
        coupling: SpinCoupling,
        options: SimOptions,
    ) -> Result<ValidatedConfig, ConfigError> {
        positive("trap.f_c", trap.f_c)?;
        if !(trap.eta_c > 0.0 && trap.eta_c < 1.0) {
            return Err(ConfigError::invalid(
                "trap.eta_c",
                format!("must lie in (0, 1), got {}", trap.eta_c),
            ));
        }
        let half = trap.spacing_periods - 0.5;
        if !trap.spacing_periods.is_finite() || (half - half.round()).abs() > 1e-9 {
            return Err(ConfigError::invalid(
                "trap.spacing_periods",
                format!("must be a half-integer (k + 1/2), got {}", trap.spacing_periods),
            ));
        }
        for (name, n) in [("trap.nbar_c", trap.nbar_c), ("trap.nbar_s", trap.nbar_s)] {
            if !(n.is_finite() && n >= 0.0) {
                return Err(ConfigError::invalid(name, format!("must be >= 0, got {n}")));
            }
        }

        if pulse.segments.is_empty() {
            return Err(ConfigError::invalid("pulse.segments", "no segments"));
        }
        for (i, s) in pulse.segments.iter().enumerate() {
            if !(s.duration.is_finite() && s.duration >= 0.0) {
                return Err(ConfigError::invalid(
                    format!("pulse.segments[{i}].duration"),
                    format!("must be >= 0, got {}", s.duration),
                ));
            }
            if !(0.0..=1.0).contains(&s.amplitude) {
                return Err(ConfigError::invalid(
                    format!("pulse.segments[{i}].amplitude"),
                    format!("must lie in [0, 1], got {}", s.amplitude),
                ));
            }
        }
        let max_amp = pulse.segments.iter().map(|s| s.amplitude).fold(0.0, f64::max);
        if max_amp != 0.0 && (max_amp - 1.0).abs() > 1e-12 {
            return Err(ConfigError::invalid(
                "pulse.segments",
                format!("largest amplitude must be 1 (scale lives in omega_peak), got {max_amp}"),
            ));
        }
        if !(pulse.edge_time.is_finite() && pulse.edge_time >= 0.0) {
            return Err(ConfigError::invalid(
                "pulse.edge_time",
                format!("must be >= 0, got {}", pulse.edge_time),
            ));
        }
        let min_duration = pulse
            .segments
            .iter()
            .map(|s| s.duration)
            .fold(f64::INFINITY, f64::min);
        if pulse.edge_time > min_duration * (1.0 + 1e-12) {
            return Err(ConfigError::invalid(
                "pulse.edge_time",
                format!(
                    "edge time {:e} s exceeds the shortest segment ({:e} s)",
                    pulse.edge_time, min_duration
                ),
            ));
        }
        if !(pulse.omega_peak.is_finite() && pulse.omega_peak >= 0.0) {
            return Err(ConfigError::invalid(
                "pulse.omega_peak",
                format!("must be >= 0, got {}", pulse.omega_peak),
            ));
        }
        positive("pulse.nu", pulse.nu)?;
        positive("pulse.gate_time", pulse.gate_time())?;

        if coupling.lambda_down == coupling.lambda_up {
            return Err(ConfigError::invalid(
                "coupling",
                "lambda_down == lambda_up gives no differential force",
            ));
        }
        if options.phi0_grid_size < 2 {
            return Err(ConfigError::invalid("sim.phi0_grid_size", "must be >= 2"));
        }
        if let Some(points) = options.grid_points {
            for (axis, n) in points.iter().enumerate() {
                if !n.is_power_of_two() || *n < 8 {
                    return Err(ConfigError::invalid(
                        format!("sim.grid_points[{axis}]"),
                        format!("must be a power of two >= 8, got {n}"),
                    ));
                }
            }
        }
        if let Some(extent) = options.grid_extent {
            for (axis, x) in extent.iter().enumerate() {
                positive(&format!("sim.grid_extent[{axis}]"), *x)?;
            }
        }
        if let Some(dt) = options.time_step {
            positive("sim.time_step", dt)?;
        }
        if let InitialState::Thermal { samples } = options.initial_state {
            if samples == 0 {
                return Err(ConfigError::invalid("sim.initial_state.samples", "must be >= 1"));
            }
        }

        let geometry = DriveGeometry::new(trap.spacing_periods);
        let envelope = Envelope::from_segments(&pulse.expanded_segments(), pulse.edge_time);
        Ok(ValidatedConfig {
            trap,
            pulse,
            coupling,
            options,
            geometry,
            envelope,
        })
    }

    /// Re-run validation on the stored inputs.
    pub fn revalidate(&self) -> Result<ValidatedConfig, ConfigError> {
        ValidatedConfig::new(
            self.trap.clone(),
            self.pulse.clone(),
            self.coupling,
            self.options.clone(),
        )
    }

    pub fn envelope(&self) -> &Envelope {
        &self.envelope
    }

    pub fn gate_time(&self) -> f64 {
        self.envelope.gate_time()
    }

    /// Normalized amplitude `Ω(t)/Ω_peak`.
    pub fn envelope_at(&self, t: f64) -> Result<f64, ConfigError> {
        let tg = self.gate_time();
        if !(0.0..=tg).contains(&t) {
            return Err(ConfigError::OutOfRange {
                what: "t",
                value: t,
                min: 0.0,
                max: tg,
            });
        }
        Ok(self.envelope.value(t))
    }

    /// `Ω(t)` in rad/s, clamped to the pulse window.
    pub fn rabi(&self, t: f64) -> f64 {
        self.pulse.omega_peak * self.envelope.value(t)
    }

    pub fn pulse_area(&self) -> f64 {
        self.pulse.omega_peak * self.envelope.area()
    }

    pub fn with_pulse(&self, pulse: PulseShape) -> Result<ValidatedConfig, ConfigError> {
        ValidatedConfig::new(self.trap.clone(), pulse, self.coupling, self.options.clone())
    }

    pub fn with_omega_peak(&self, omega_peak: f64) -> ValidatedConfig {
        ValidatedConfig {
            pulse: self.pulse.with_omega_peak(omega_peak),
            ..self.clone()
        }
    }

    pub fn with_trap(&self, trap: TrapSpec) -> Result<ValidatedConfig, ConfigError> {
        ValidatedConfig::new(trap, self.pulse.clone(), self.coupling, self.options.clone())
    }

    pub fn with_options(&self, options: SimOptions) -> Result<ValidatedConfig, ConfigError> {
        ValidatedConfig::new(self.trap.clone(), self.pulse.clone(), self.coupling, options)
    }
}
