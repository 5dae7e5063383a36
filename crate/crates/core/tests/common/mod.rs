//! Measurements shared by the property tests and the acceptance suite.
//!
//! Each function returns the measured figure so callers can apply their own
//! thresholds and report the value.

#![allow(dead_code)]

use std::f64::consts::TAU;

use fastgate::full::{self, BranchWave};
use fastgate::ld::{drive_terms, LdSolver};
use fastgate::model::SimOptions;
use fastgate::optimize::{run_search, SearchSpace};
use fastgate::waveform::{compile, fit_envelope, FitOptions, Trace, DEFAULT_SAMPLE_RATE};
use fastgate::{presets, Branch, Mode, ValidatedConfig};
use num_complex::Complex64;

/// The 1.59 µs reference gate on a reduced φ₀ grid.
pub fn high_fidelity(phi0_points: usize) -> ValidatedConfig {
    let cfg = presets::high_fidelity();
    cfg.with_options(SimOptions {
        phi0_grid_size: phi0_points,
        ..cfg.options.clone()
    })
    .expect("valid options")
}

/// Independent LD integration: RK4 on `(α, Φ_m, φ_LS)` piece by piece.
pub struct Rk4Outcome {
    pub alpha: [Complex64; 2],
    pub geometric: [f64; 2],
    pub light_shift: f64,
}

pub fn rk4_branch(config: &ValidatedConfig, branch: Branch, phi0: f64, max_step: f64) -> Rk4Outcome {
    let env = config.envelope();
    let beat = TAU * config.pulse.nu;
    let omega = config.pulse.omega_peak;
    let lambdas = config.coupling.branch_lambdas(branch);
    let phasors = config.geometry.phasors();
    let d = phasors[0] * lambdas[0] + phasors[1] * lambdas[1];
    let mut out = Rk4Outcome {
        alpha: [Complex64::new(0.0, 0.0); 2],
        geometric: [0.0; 2],
        light_shift: 0.0,
    };
    for mode in Mode::ALL {
        let terms = drive_terms(config, branch, mode);
        let rate = |t: f64| terms.alpha_rate(env.value(t), t, phi0);
        // State (α, Φ) with dΦ/dt = Im(ᾱ α̇).
        let deriv = |t: f64, a: Complex64| {
            let r = rate(t);
            (r, (a.conj() * r).im)
        };
        let (mut a, mut phi) = (Complex64::new(0.0, 0.0), 0.0);
        for p in env.pieces() {
            let n = (p.len() / max_step).ceil().max(1.0) as usize;
            let h = p.len() / n as f64;
            for k in 0..n {
                let t = p.start + k as f64 * h;
                let (k1a, k1p) = deriv(t, a);
                let (k2a, k2p) = deriv(t + 0.5 * h, a + k1a * (0.5 * h));
                let (k3a, k3p) = deriv(t + 0.5 * h, a + k2a * (0.5 * h));
                let (k4a, k4p) = deriv(t + h, a + k3a * h);
                a += (k1a + k2a * 2.0 + k3a * 2.0 + k4a) * (h / 6.0);
                phi += (k1p + 2.0 * k2p + 2.0 * k3p + k4p) * (h / 6.0);
            }
        }
        out.alpha[mode.index()] = a;
        out.geometric[mode.index()] = phi;
    }
    // Simpson on each piece for the motion-independent light shift.
    for p in env.pieces() {
        let n = 2 * ((p.len() / max_step).ceil().max(1.0) as usize);
        let h = p.len() / n as f64;
        let f = |t: f64| -omega * env.value(t) * (d * Complex64::from_polar(1.0, -(beat * t + phi0))).re;
        let mut s = f(p.start) + f(p.end);
        for k in 1..n {
            s += f(p.start + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        out.light_shift += s * h / 3.0;
    }
    out
}

/// Largest deviation between the closed-form LD solver and RK4 over all
/// branches and a few φ₀ values (displacements and phases, absolute).
pub fn ld_vs_rk4(config: &ValidatedConfig) -> f64 {
    let solver = LdSolver::new(config);
    let mut worst = 0.0f64;
    for branch in Branch::ALL {
        for phi0 in [0.0, 1.3, 4.0] {
            let o = solver.outcome(branch, phi0);
            let r = rk4_branch(config, branch, phi0, 0.02e-9);
            for m in 0..2 {
                worst = worst.max((o.residual[m] - r.alpha[m]).norm());
                worst = worst.max((o.geometric[m] - r.geometric[m]).abs());
            }
            worst = worst.max((o.light_shift - r.light_shift).abs());
        }
    }
    worst
}

/// Norm drift per 10⁴ split-operator steps, worst branch and φ₀.
pub fn norm_drift_per_10k(config: &ValidatedConfig) -> f64 {
    let r = full::full_gate_error(config).expect("full solver");
    r.norm_drift / (r.steps as f64 / 1e4).max(1.0)
}

/// `|ε(dt) − ε(dt/2)|` at the configured or default step.
pub fn dt_convergence(config: &ValidatedConfig) -> (f64, f64) {
    let base = full::full_gate_error(config).expect("full solver");
    let fine = config
        .with_options(SimOptions {
            time_step: Some(base.time_step / 2.0),
            grid_points: Some(base.grid.points),
            grid_extent: Some(base.grid.extent),
            ..config.options.clone()
        })
        .expect("valid options");
    let half = full::full_gate_error(&fine).expect("full solver");
    (base.bell_error, (base.bell_error - half.bell_error).abs())
}

/// `|ε(N, X) − ε(2N, 2X)|` at the automatic grid.
pub fn grid_convergence(config: &ValidatedConfig) -> (f64, f64) {
    let base = full::full_gate_error(config).expect("full solver");
    let big = config
        .with_options(SimOptions {
            grid_points: Some(base.grid.points.map(|n| 2 * n)),
            grid_extent: Some(base.grid.extent.map(|x| 2.0 * x)),
            ..config.options.clone()
        })
        .expect("valid options");
    let wide = full::full_gate_error(&big).expect("full solver");
    (base.bell_error, (base.bell_error - wide.bell_error).abs())
}

/// `|ε(8 φ₀) − ε(16 φ₀)|` for the full solver.
pub fn phi0_convergence(config: &ValidatedConfig) -> (f64, f64) {
    let with = |n: usize| {
        let c = config
            .with_options(SimOptions {
                phi0_grid_size: n,
                ..config.options.clone()
            })
            .expect("valid options");
        full::full_gate_error(&c).expect("full solver").bell_error
    };
    let (a, b) = (with(8), with(16));
    (b, (a - b).abs())
}

/// `1 − |⟨ψ_↑↓(φ₀)|ψ_↓↑(φ₀ + π)⟩|`, both propagated directly.
pub fn branch_symmetry_defect(config: &ValidatedConfig, phi0: f64) -> f64 {
    let grid = full::grid_for(config).expect("grid");
    let ud = full::propagate_full(config, Branch::UpDown, phi0, BranchWave::ground(&grid, Branch::UpDown, phi0))
        .expect("propagate");
    let phi1 = phi0 + std::f64::consts::PI;
    let du = full::propagate_full(config, Branch::DownUp, phi1, BranchWave::ground(&grid, Branch::DownUp, phi1))
        .expect("propagate");
    1.0 - ud.overlap(&du).norm()
}

/// A small 7-segment space for determinism checks.
pub fn small_space() -> SearchSpace {
    let trap = presets::high_fidelity_trap();
    let mut space = SearchSpace::new(trap.clone(), 7, 1.6e-6, [trap.f_c * 1.05, trap.f_s() * 0.95]);
    space.max_evaluations = 150;
    space.restarts = 1;
    space.full_budget = 0;
    space.sensitivity_draws = 10;
    space.epsilon_t = 1.0;
    space
}

/// Serialized solution sets of two identical searches, run on pools of
/// different sizes.
pub fn search_outputs(space: &SearchSpace, seeds: usize, rng: u64) -> (String, String) {
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("pool");
        let set = pool.install(|| run_search(space, seeds, rng)).expect("search");
        serde_json::to_string(&set).expect("serialize")
    };
    (run(1), run(3))
}

/// Worst recovered amplitude and timing errors after compile → fit.
pub struct RoundTrip {
    pub amplitude: f64,
    pub timing: f64,
    pub edge: f64,
}

pub fn compile_fit_round_trip(config: &ValidatedConfig) -> RoundTrip {
    let stream = compile(&config.pulse, DEFAULT_SAMPLE_RATE, None).expect("compile");
    let segs = config.pulse.expanded_segments();
    let fit = fit_envelope(&Trace::from_stream(&stream), segs.len(), &FitOptions::default()).expect("fit");
    let mut rt = RoundTrip {
        amplitude: 0.0,
        timing: 0.0,
        edge: (fit.edge_time - config.pulse.edge_time).abs(),
    };
    for (s, f) in segs.iter().zip(fit.segments()) {
        rt.amplitude = rt.amplitude.max((s.amplitude - f.amplitude).abs());
        rt.timing = rt.timing.max((s.duration - f.duration).abs());
    }
    rt
}
