//! Lamb-Dicke regime solver.
//!
//! To first order in η the branch-`s` force on mode `m` is
//! `F = √2 η_m Ω(t) Im[C_m^s e^{-iψ}]` with `ψ = 2πνt + φ₀` and
//! `C_m^s = Σ_j λ_{s_j} b_{j,m} e^{iθ_j}`. The rotating-frame displacement
//! obeys `α̇ = i F e^{iω_m t}`, so it splits into two φ₀-independent
//! envelope integrals
//!
//! `α = x U₋ + y U₊`, `U_∓(t) = ∫₀ᵗ a(t') e^{i(ω_m ∓ 2πν)t'} dt'`,
//!
//! with `x = ½ C' e^{-iφ₀}`, `y = −½ C̄' e^{iφ₀}` and `C' = √2 η_m Ω_peak C_m^s`.
//! The geometric phase `Im ∫ ᾱ dα` is a Hermitian form in `(x, y)` built from
//! `M_ab = ∫ Ū_a dU_b`. Both are computed once per mode, after which every
//! branch and every φ₀ costs O(1). No rotating-wave approximation is made.

use std::f64::consts::{SQRT_2, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fidelity::{self, ModeInit, Overlaps};
use crate::model::{Branch, Envelope, EnvelopePiece, InitialState, Mode, ValidatedConfig};
use crate::quad::{gauss_legendre_16, oscillatory_moments};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest phase advance (rad) per Gauss-Legendre panel.
const PANEL_PHASE: f64 = 3.0;

/// `∫_{s0}^{s1} a(t) e^{ikt} dt` on one linear envelope piece.
fn piece_integral(k: f64, p: &EnvelopePiece, s0: f64, s1: f64) -> Complex64 {
    let len = s1 - s0;
    if len <= 0.0 {
        return ZERO;
    }
    let a0 = p.value_at(s0);
    let slope = if p.len() > 0.0 { p.slope() } else { 0.0 };
    let (m0, m1) = oscillatory_moments(k, len);
    Complex64::from_polar(1.0, k * s0) * (m0 * a0 + m1 * slope)
}

/// Running integral `∫₀ᵗ a e^{ikt'} dt'` with cached values at piece starts.
#[derive(Clone, Debug)]
pub struct PrefixIntegral {
    k: f64,
    starts: Vec<Complex64>,
    total: Complex64,
}

impl PrefixIntegral {
    pub fn new(env: &Envelope, k: f64) -> Self {
        let mut acc = ZERO;
        let mut starts = Vec::with_capacity(env.pieces().len());
        for p in env.pieces() {
            starts.push(acc);
            acc += piece_integral(k, p, p.start, p.end);
        }
        PrefixIntegral {
            k,
            starts,
            total: acc,
        }
    }

    pub fn total(&self) -> Complex64 {
        self.total
    }

    pub fn at(&self, env: &Envelope, t: f64) -> Complex64 {
        let pieces = env.pieces();
        if pieces.is_empty() || t <= 0.0 {
            return ZERO;
        }
        if t >= env.gate_time() {
            return self.total;
        }
        let idx = pieces.partition_point(|p| p.end <= t).min(pieces.len() - 1);
        let p = &pieces[idx];
        self.starts[idx] + piece_integral(self.k, p, p.start, t)
    }
}

/// Envelope integrals of one mode over an interval `[t0, t1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeIntegrals {
    /// `[k₋, k₊] = [ω − 2πν, ω + 2πν]` (rad/s).
    pub k: [f64; 2],
    /// `U_a(t1) − U_a(t0)` for `a ∈ {−, +}`.
    pub u: [Complex64; 2],
    /// `M_ab = ∫ Ū_a dU_b` with `U` measured from `t0`.
    pub m: [[Complex64; 2]; 2],
}

impl ModeIntegrals {
    pub fn over(env: &Envelope, omega_mode: f64, omega_beat: f64, t0: f64, t1: f64) -> Self {
        let k = [omega_mode - omega_beat, omega_mode + omega_beat];
        let kmax = k[0].abs().max(k[1].abs());
        let (nodes, weights) = gauss_legendre_16();
        let mut u = [ZERO; 2];
        let mut m = [[ZERO; 2]; 2];
        for p in env.pieces() {
            let s0 = p.start.max(t0);
            let s1 = p.end.min(t1);
            if s1 <= s0 {
                continue;
            }
            let panels = ((kmax * (s1 - s0)) / PANEL_PHASE).ceil().max(1.0) as usize;
            let h = (s1 - s0) / panels as f64;
            for j in 0..panels {
                let a = s0 + j as f64 * h;
                for (x, w) in nodes.iter().zip(weights) {
                    let t = a + 0.5 * h * (x + 1.0);
                    let env_t = p.value_at(t);
                    let wt = 0.5 * h * w * env_t;
                    let ua = [
                        u[0] + piece_integral(k[0], p, s0, t),
                        u[1] + piece_integral(k[1], p, s0, t),
                    ];
                    let db = [
                        Complex64::from_polar(wt, k[0] * t),
                        Complex64::from_polar(wt, k[1] * t),
                    ];
                    for ia in 0..2 {
                        let ca = ua[ia].conj();
                        for ib in 0..2 {
                            m[ia][ib] += ca * db[ib];
                        }
                    }
                }
            }
            u[0] += piece_integral(k[0], p, s0, s1);
            u[1] += piece_integral(k[1], p, s0, s1);
        }
        ModeIntegrals { k, u, m }
    }
}

/// Force coefficients of one mode for one branch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveTerms {
    /// `C = Σ_j λ_{s_j} b_{j,m} e^{iθ_j}`.
    pub coefficient: Complex64,
    pub eta: f64,
    pub omega_mode: f64,
    pub omega_beat: f64,
    pub omega_peak: f64,
}

impl DriveTerms {
    /// Force amplitude `g(t, φ₀) = Ω(t) Σ_j λ_{s_j} b_{j,m} sin(θ_j − 2πνt − φ₀)` (rad/s).
    pub fn force_amplitude(&self, envelope: f64, t: f64, phi0: f64) -> f64 {
        let psi = self.omega_beat * t + phi0;
        self.omega_peak * envelope * (self.coefficient * Complex64::from_polar(1.0, -psi)).im
    }

    /// `dα/dt` at `t` in the rotating frame.
    pub fn alpha_rate(&self, envelope: f64, t: f64, phi0: f64) -> Complex64 {
        let f = SQRT_2 * self.eta * self.force_amplitude(envelope, t, phi0);
        Complex64::new(0.0, f) * Complex64::from_polar(1.0, self.omega_mode * t)
    }

    /// `(x, y)` for `α = x U₋ + y U₊`.
    fn split(&self, phi0: f64) -> (Complex64, Complex64) {
        let c = self.coefficient * (SQRT_2 * self.eta * self.omega_peak);
        let x = 0.5 * c * Complex64::from_polar(1.0, -phi0);
        let y = -0.5 * c.conj() * Complex64::from_polar(1.0, phi0);
        (x, y)
    }
}

/// Mode force for `branch` on `mode`.
pub fn drive_terms(config: &ValidatedConfig, branch: Branch, mode: Mode) -> DriveTerms {
    let lambdas = config.coupling.branch_lambdas(branch);
    let phasors = config.geometry.phasors();
    let mut c = ZERO;
    for j in 0..2 {
        c += phasors[j] * (lambdas[j] * config.geometry.b(j, mode));
    }
    DriveTerms {
        coefficient: c,
        eta: config.trap.lamb_dicke(mode),
        omega_mode: config.trap.angular_frequency(mode),
        omega_beat: TAU * config.pulse.nu,
        omega_peak: config.pulse.omega_peak,
    }
}

/// `Σ_j λ_{s_j} e^{iθ_j}`, the motion-independent light-shift coefficient.
fn light_shift_coefficient(config: &ValidatedConfig, branch: Branch) -> Complex64 {
    let lambdas = config.coupling.branch_lambdas(branch);
    let phasors = config.geometry.phasors();
    phasors[0] * lambdas[0] + phasors[1] * lambdas[1]
}

/// Branch state in the interaction frame: displacements plus accumulated phases.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct LdState {
    pub alpha: [Complex64; 2],
    pub geometric: [f64; 2],
    pub light_shift: f64,
}

impl LdState {
    pub fn phase(&self) -> f64 {
        self.geometric[0] + self.geometric[1] + self.light_shift
    }
}

/// Sampled trajectory of one branch at one φ₀.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdTrajectory {
    pub branch: Branch,
    pub phi0: f64,
    pub times: Vec<f64>,
    /// `[α_c(t), α_s(t)]` at each sample time.
    pub alpha: Vec<[Complex64; 2]>,
    /// `[Φ_c, Φ_s]` (rad).
    pub geometric: [f64; 2],
    pub light_shift: f64,
    pub residual: [Complex64; 2],
}

impl LdTrajectory {
    pub fn total_geometric(&self) -> f64 {
        self.geometric[0] + self.geometric[1]
    }

    pub fn phase(&self) -> f64 {
        self.total_geometric() + self.light_shift
    }
}

/// Final state of one branch at one φ₀.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchOutcome {
    pub branch: Branch,
    pub phi0: f64,
    pub geometric: [f64; 2],
    pub light_shift: f64,
    pub residual: [Complex64; 2],
}

impl BranchOutcome {
    pub fn phase(&self) -> f64 {
        self.geometric[0] + self.geometric[1] + self.light_shift
    }
}

/// φ₀-averaged Lamb-Dicke gate figures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdGateResult {
    pub phi0_grid: Vec<f64>,
    /// `outcomes[k][s]` for φ₀ index `k` and branch index `s`.
    pub outcomes: Vec<[BranchOutcome; 4]>,
    pub bell_error: f64,
    pub phi_half: f64,
    pub entangling_phase: f64,
    pub phase_spread: f64,
    pub closure_defect: f64,
    pub max_displacement: f64,
    pub pulse_area: f64,
}

/// Envelope integrals of a configuration, reusable across branches, φ₀ and Ω.
#[derive(Clone, Debug)]
pub struct LdSolver<'a> {
    config: &'a ValidatedConfig,
    modes: [ModeIntegrals; 2],
    /// `∫ a e^{-i2πνt} dt`.
    light_shift_integral: Complex64,
}

impl<'a> LdSolver<'a> {
    pub fn new(config: &'a ValidatedConfig) -> Self {
        Self::over(config, 0.0, config.gate_time())
    }

    fn over(config: &'a ValidatedConfig, t0: f64, t1: f64) -> Self {
        let env = config.envelope();
        let beat = TAU * config.pulse.nu;
        let modes = Mode::ALL.map(|m| {
            ModeIntegrals::over(env, config.trap.angular_frequency(m), beat, t0, t1)
        });
        let mut w = ZERO;
        for p in env.pieces() {
            let s0 = p.start.max(t0);
            let s1 = p.end.min(t1);
            if s1 > s0 {
                w += piece_integral(-beat, p, s0, s1);
            }
        }
        LdSolver {
            config,
            modes,
            light_shift_integral: w,
        }
    }

    pub fn mode_integrals(&self, mode: Mode) -> &ModeIntegrals {
        &self.modes[mode.index()]
    }

    /// Branch outcome for an arbitrary peak Rabi frequency.
    pub fn outcome_at(&self, branch: Branch, phi0: f64, omega_peak: f64) -> BranchOutcome {
        let state = self.advance(branch, phi0, omega_peak, &LdState::default());
        BranchOutcome {
            branch,
            phi0,
            geometric: state.geometric,
            light_shift: state.light_shift,
            residual: state.alpha,
        }
    }

    pub fn outcome(&self, branch: Branch, phi0: f64) -> BranchOutcome {
        self.outcome_at(branch, phi0, self.config.pulse.omega_peak)
    }

    fn advance(&self, branch: Branch, phi0: f64, omega_peak: f64, start: &LdState) -> LdState {
        let mut out = *start;
        for mode in Mode::ALL {
            let mut terms = drive_terms(self.config, branch, mode);
            terms.omega_peak = omega_peak;
            let (x, y) = terms.split(phi0);
            let mi = &self.modes[mode.index()];
            let delta = x * mi.u[0] + y * mi.u[1];
            let coefs = [x, y];
            let mut form = ZERO;
            for a in 0..2 {
                for b in 0..2 {
                    form += coefs[a].conj() * coefs[b] * mi.m[a][b];
                }
            }
            let i = mode.index();
            out.geometric[i] += form.im + (start.alpha[i].conj() * delta).im;
            out.alpha[i] = start.alpha[i] + delta;
        }
        let d = light_shift_coefficient(self.config, branch);
        out.light_shift -= omega_peak
            * (d * Complex64::from_polar(1.0, -phi0) * self.light_shift_integral).re;
        out
    }

    /// Entangling phase at φ₀ for the given peak Rabi frequency.
    pub fn entangling_phase_at(&self, phi0: f64, omega_peak: f64) -> f64 {
        let p = Branch::ALL.map(|b| self.outcome_at(b, phi0, omega_peak).phase());
        0.5 * (p[1] + p[2] - p[0] - p[3])
    }

    /// φ₀-averaged entangling phase at the given peak Rabi frequency.
    pub fn mean_entangling_phase(&self, omega_peak: f64) -> f64 {
        let grid = self.config.options.phi0_grid();
        grid.iter()
            .map(|&phi0| self.entangling_phase_at(phi0, omega_peak))
            .sum::<f64>()
            / grid.len() as f64
    }

    pub fn gate_result(&self) -> LdGateResult {
        self.gate_result_at(self.config.pulse.omega_peak)
    }

    pub fn gate_result_at(&self, omega_peak: f64) -> LdGateResult {
        let grid = self.config.options.phi0_grid();
        let init = mode_inits(self.config);
        let mut outcomes = Vec::with_capacity(grid.len());
        let mut overlaps: Vec<Overlaps> = Vec::with_capacity(grid.len());
        let mut phases = Vec::with_capacity(grid.len());
        let mut closure: f64 = 0.0;
        for &phi0 in &grid {
            let o = Branch::ALL.map(|b| self.outcome_at(b, phi0, omega_peak));
            let mut g = fidelity::zero_overlaps();
            for s in 0..4 {
                for p in 0..4 {
                    g[s][p] = fidelity::branch_overlap(
                        o[s].phase(),
                        &o[s].residual,
                        o[p].phase(),
                        &o[p].residual,
                        &init,
                    );
                }
                closure = closure.max(o[s].residual[0].norm()).max(o[s].residual[1].norm());
            }
            phases.push(0.5 * (o[1].phase() + o[2].phase() - o[0].phase() - o[3].phase()));
            overlaps.push(g);
            outcomes.push(o);
        }
        let g = fidelity::mean_overlaps(&overlaps);
        let ramsey = fidelity::analyze(&g, self.config.pulse.phi_half);
        let mean_phase = phases.iter().sum::<f64>() / phases.len() as f64;
        let spread = phases.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - phases.iter().cloned().fold(f64::INFINITY, f64::min);
        let pulse_area = omega_peak * self.config.envelope().area();
        LdGateResult {
            phi0_grid: grid,
            outcomes,
            bell_error: (1.0 - ramsey.fidelity).clamp(0.0, 1.0),
            phi_half: ramsey.phi_half,
            entangling_phase: mean_phase,
            phase_spread: spread,
            closure_defect: closure,
            max_displacement: f64::NAN,
            pulse_area,
        }
    }
}

/// Per-mode initial state for closed-form overlaps.
pub fn mode_inits(config: &ValidatedConfig) -> [ModeInit; 2] {
    match &config.options.initial_state {
        InitialState::Ground => [ModeInit::Thermal { nbar: 0.0 }; 2],
        InitialState::Thermal { .. } => Mode::ALL.map(|m| ModeInit::Thermal {
            nbar: config.trap.nbar(m),
        }),
        InitialState::Coherent { alpha_c, alpha_s } => [
            ModeInit::Coherent {
                alpha: Complex64::new(alpha_c[0], alpha_c[1]),
            },
            ModeInit::Coherent {
                alpha: Complex64::new(alpha_s[0], alpha_s[1]),
            },
        ],
    }
}

/// Propagate one branch over `[t0, t1]` starting from `start`.
pub fn propagate_ld_interval(
    config: &ValidatedConfig,
    branch: Branch,
    phi0: f64,
    t0: f64,
    t1: f64,
    start: &LdState,
) -> LdState {
    let solver = LdSolver::over(config, t0, t1);
    solver.advance(branch, phi0, config.pulse.omega_peak, start)
}

/// Trajectory of one branch sampled at `config.options.trajectory_samples` points.
pub fn propagate_ld(config: &ValidatedConfig, branch: Branch, phi0: f64) -> LdTrajectory {
    let solver = LdSolver::new(config);
    let env = config.envelope();
    let tg = config.gate_time();
    let beat = TAU * config.pulse.nu;
    let n = config.options.trajectory_samples.max(2);
    let times: Vec<f64> = (0..n).map(|i| tg * i as f64 / (n - 1) as f64).collect();
    let mut alpha = vec![[ZERO; 2]; n];
    for mode in Mode::ALL {
        let terms = drive_terms(config, branch, mode);
        let (x, y) = terms.split(phi0);
        let w = config.trap.angular_frequency(mode);
        let um = PrefixIntegral::new(env, w - beat);
        let up = PrefixIntegral::new(env, w + beat);
        for (i, &t) in times.iter().enumerate() {
            alpha[i][mode.index()] = x * um.at(env, t) + y * up.at(env, t);
        }
    }
    let o = solver.outcome(branch, phi0);
    LdTrajectory {
        branch,
        phi0,
        times,
        alpha,
        geometric: o.geometric,
        light_shift: o.light_shift,
        residual: o.residual,
    }
}

/// φ₀-averaged Lamb-Dicke gate error.
pub fn ld_gate_error(config: &ValidatedConfig) -> LdGateResult {
    let solver = LdSolver::new(config);
    let mut result = solver.gate_result();
    result.max_displacement = max_displacement(config, 64);
    result
}

/// Largest `|α_m(t)|` over branches, modes, a coarse φ₀ grid and `samples` times.
pub fn max_displacement(config: &ValidatedConfig, samples: usize) -> f64 {
    let [c, s] = max_displacement_per_mode(config, samples);
    c.max(s)
}

/// Per-mode largest `|α_m(t)|` over branches, 8 φ₀ values and `samples` times.
pub fn max_displacement_per_mode(config: &ValidatedConfig, samples: usize) -> [f64; 2] {
    let env = config.envelope();
    let tg = config.gate_time();
    let beat = TAU * config.pulse.nu;
    let n = samples.max(2);
    let mut best = [0.0f64; 2];
    for mode in Mode::ALL {
        let w = config.trap.angular_frequency(mode);
        let um = PrefixIntegral::new(env, w - beat);
        let up = PrefixIntegral::new(env, w + beat);
        let u: Vec<(Complex64, Complex64)> = (0..n)
            .map(|i| {
                let t = tg * i as f64 / (n - 1) as f64;
                (um.at(env, t), up.at(env, t))
            })
            .collect();
        for branch in Branch::ALL {
            let terms = drive_terms(config, branch, mode);
            for phi0 in crate::model::uniform_phase_grid(8, 0.0) {
                let (x, y) = terms.split(phi0);
                for (a, b) in &u {
                    let v = (x * a + y * b).norm();
                    if v > best[mode.index()] {
                        best[mode.index()] = v;
                    }
                }
            }
        }
    }
    best
}

/// φ₀-averaged `(φ_↓↑ + φ_↑↓ − φ_↓↓ − φ_↑↑)/2` (rad).
pub fn entangling_phase(config: &ValidatedConfig) -> f64 {
    LdSolver::new(config).mean_entangling_phase(config.pulse.omega_peak)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PulseShape;
    use crate::presets;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn drive_coefficients_for_anti_phase_ions() {
        let cfg = presets::high_fidelity();
        let du_c = drive_terms(&cfg, Branch::DownUp, Mode::Com).coefficient.norm();
        let du_s = drive_terms(&cfg, Branch::DownUp, Mode::Stretch).coefficient.norm();
        let dd_c = drive_terms(&cfg, Branch::DownDown, Mode::Com).coefficient.norm();
        let dd_s = drive_terms(&cfg, Branch::DownDown, Mode::Stretch).coefficient.norm();
        assert!((du_c - SQRT_2).abs() < 1e-12);
        assert!(du_s < 1e-12);
        assert!(dd_c < 1e-12);
        assert!((dd_s - SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn zero_pulse_is_inert() {
        let cfg = presets::high_fidelity().with_omega_peak(0.0);
        let r = ld_gate_error(&cfg);
        assert_eq!(r.closure_defect, 0.0);
        assert_eq!(r.entangling_phase, 0.0);
        assert!((r.bell_error - 0.5).abs() < 1e-12);
        let t = propagate_ld(&cfg, Branch::DownUp, 0.3);
        assert!(t.alpha.iter().all(|a| a[0] == ZERO && a[1] == ZERO));
        assert_eq!(t.light_shift, 0.0);
    }

    #[test]
    fn phase_is_quadratic_in_omega() {
        let cfg = presets::adiabatic();
        let solver = LdSolver::new(&cfg);
        let p1 = solver.mean_entangling_phase(1e4);
        let p2 = solver.mean_entangling_phase(2e4);
        assert!((p2 / p1 - 4.0).abs() < 1e-9);
    }

    #[test]
    fn interval_split_is_additive() {
        let cfg = presets::high_fidelity();
        let tg = cfg.gate_time();
        for &t1 in &[0.1 * tg, 0.37 * tg, 0.5 * tg] {
            let one = propagate_ld_interval(&cfg, Branch::DownUp, 0.7, 0.0, tg, &LdState::default());
            let a = propagate_ld_interval(&cfg, Branch::DownUp, 0.7, 0.0, t1, &LdState::default());
            let b = propagate_ld_interval(&cfg, Branch::DownUp, 0.7, t1, tg, &a);
            for m in 0..2 {
                assert!((one.alpha[m] - b.alpha[m]).norm() < 1e-10);
                assert!((one.geometric[m] - b.geometric[m]).abs() < 1e-10);
            }
            assert!((one.light_shift - b.light_shift).abs() < 1e-10);
        }
    }

    #[test]
    fn trajectory_end_matches_residual() {
        let cfg = presets::high_fidelity();
        let t = propagate_ld(&cfg, Branch::DownDown, 1.1);
        let last = t.alpha.last().unwrap();
        for m in 0..2 {
            assert!((last[m] - t.residual[m]).norm() < 1e-12);
        }
        assert_eq!(t.alpha[0], [ZERO; 2]);
    }

    #[test]
    fn calibrated_high_fidelity_gate_is_good() {
        let cfg = presets::high_fidelity();
        let r = ld_gate_error(&cfg);
        assert!((r.entangling_phase.abs() - FRAC_PI_2).abs() < 1e-6, "{}", r.entangling_phase);
        assert!(r.bell_error < 1e-3, "{}", r.bell_error);
    }

    #[test]
    fn rectangular_pulse_area() {
        let p = PulseShape::rectangular(10e-6, 0.0, 1e5, 2e6);
        assert!((p.area() - 1.0).abs() < 1e-12);
    }
}
