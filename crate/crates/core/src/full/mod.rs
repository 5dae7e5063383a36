//! Split-operator solver for the full two-mode Hamiltonian
//!
//! `H_s = Σ_m ω_m (p_m² + q_m²)/2 + Ω(t) Σ_j λ_{s_j} cos(θ_j + Σ_m 2 b_{j,m} η_m q_m − 2πνt − φ₀)`
//!
//! on a 2D grid in normal-mode coordinates. The spin is frozen during the
//! gate, so the four branches evolve independently in one shared lab frame.

pub mod curve;
pub mod grid;
mod propagate;
pub mod snapshot;

use std::f64::consts::{FRAC_PI_2, SQRT_2, TAU};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use grid::{Fft2, MotionalGrid};
pub use propagate::{
    audit_time_step, default_time_step, time_steps, Propagator, RunStats, Snapshot, CHECK_INTERVAL,
    LEAKAGE_LIMIT,
};

use crate::error::SolverError;
use crate::fidelity::{self, Overlaps};
use crate::ld;
use crate::model::{Branch, InitialState, Mode, SimOptions, ValidatedConfig};

/// Motional wavefunction of one spin branch on a grid, `[c][s]` row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchWave {
    pub grid: MotionalGrid,
    pub branch: Branch,
    pub phi0: f64,
    pub data: Vec<Complex64>,
    /// Norm at each checkpoint.
    pub norm_history: Vec<f64>,
}

impl BranchWave {
    /// Product of coherent states `|α_c⟩|α_s⟩`, normalized on the grid.
    pub fn coherent(grid: &MotionalGrid, branch: Branch, phi0: f64, alpha: [Complex64; 2]) -> Self {
        let axis = |m: usize| -> Vec<Complex64> {
            let q0 = SQRT_2 * alpha[m].re;
            let p0 = SQRT_2 * alpha[m].im;
            grid.positions(m)
                .into_iter()
                .map(|q| {
                    let d = q - q0;
                    Complex64::from_polar((-0.5 * d * d).exp(), p0 * q - 0.5 * p0 * q0)
                })
                .collect()
        };
        let (fc, fs) = (axis(0), axis(1));
        let mut data = Vec::with_capacity(grid.len());
        for a in &fc {
            for b in &fs {
                data.push(a * b);
            }
        }
        let norm: f64 = data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        data.iter_mut().for_each(|v| *v /= norm);
        BranchWave {
            grid: grid.clone(),
            branch,
            phi0,
            data,
            norm_history: Vec::new(),
        }
    }

    pub fn ground(grid: &MotionalGrid, branch: Branch, phi0: f64) -> Self {
        Self::coherent(grid, branch, phi0, [Complex64::new(0.0, 0.0); 2])
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨other|self⟩`.
    pub fn overlap(&self, other: &BranchWave) -> Complex64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| b.conj() * a)
            .sum()
    }
}

/// `V(q_c, q_s)` for one branch at time `t` (rad/s), `[c][s]` row-major.
pub fn build_potential(
    config: &ValidatedConfig,
    grid: &MotionalGrid,
    branch: Branch,
    t: f64,
    phi0: f64,
) -> Vec<f64> {
    let lambdas = config.coupling.branch_lambdas(branch);
    let psi = TAU * config.pulse.nu * t + phi0;
    let omega = config.rabi(t);
    let qc = grid.positions(0);
    let qs = grid.positions(1);
    let mut out = Vec::with_capacity(grid.len());
    for &x in &qc {
        for &y in &qs {
            let mut v = 0.0;
            for j in 0..2 {
                let shift = Mode::ALL
                    .iter()
                    .zip([x, y])
                    .map(|(&m, q)| 2.0 * config.geometry.b(j, m) * config.trap.lamb_dicke(m) * q)
                    .sum::<f64>();
                v += lambdas[j] * (config.geometry.theta[j] + shift - psi).cos();
            }
            out.push(omega * v);
        }
    }
    out
}

/// Grid for a configuration: explicit options or sized from the LD excursion.
pub fn grid_for(config: &ValidatedConfig) -> Result<MotionalGrid, SolverError> {
    let opts = &config.options;
    if let (Some(points), Some(extent)) = (opts.grid_points, opts.grid_extent) {
        return Ok(MotionalGrid::new(points, extent)?);
    }
    let mut reach = ld::max_displacement_per_mode(config, 256);
    let offset = initial_reach(config);
    for m in 0..2 {
        reach[m] += offset[m];
    }
    let auto = MotionalGrid::sized_for(reach);
    let points = opts.grid_points.unwrap_or(auto.points);
    let extent = opts.grid_extent.unwrap_or(auto.extent);
    Ok(MotionalGrid::new(points, extent)?)
}

fn initial_reach(config: &ValidatedConfig) -> [f64; 2] {
    match &config.options.initial_state {
        InitialState::Ground => [0.0; 2],
        InitialState::Coherent { alpha_c, alpha_s } => [
            Complex64::new(alpha_c[0], alpha_c[1]).norm(),
            Complex64::new(alpha_s[0], alpha_s[1]).norm(),
        ],
        // Five standard deviations of the Glauber P distribution.
        InitialState::Thermal { .. } => Mode::ALL.map(|m| 5.0 * config.trap.nbar(m).sqrt()),
    }
}

/// Initial coherent amplitudes, one entry per sample.
pub fn initial_samples(config: &ValidatedConfig) -> Vec<[Complex64; 2]> {
    match &config.options.initial_state {
        InitialState::Ground => vec![[Complex64::new(0.0, 0.0); 2]],
        InitialState::Coherent { alpha_c, alpha_s } => vec![[
            Complex64::new(alpha_c[0], alpha_c[1]),
            Complex64::new(alpha_s[0], alpha_s[1]),
        ]],
        InitialState::Thermal { samples } => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.options.rng_seed);
            let sd = Mode::ALL.map(|m| (0.5 * config.trap.nbar(m)).sqrt());
            (0..*samples)
                .map(|_| {
                    Mode::ALL.map(|m| {
                        if sd[m.index()] == 0.0 {
                            return Complex64::new(0.0, 0.0);
                        }
                        let n = Normal::new(0.0, sd[m.index()]).expect("finite sd");
                        Complex64::new(n.sample(&mut rng), n.sample(&mut rng))
                    })
                })
                .collect()
        }
    }
}

/// Propagate one branch from `initial` through the whole pulse.
pub fn propagate_full(
    config: &ValidatedConfig,
    branch: Branch,
    phi0: f64,
    initial: BranchWave,
) -> Result<BranchWave, SolverError> {
    let mut prop = Propagator::new(config, &initial.grid)?;
    let mut wave = BranchWave {
        branch,
        phi0,
        ..initial
    };
    prop.run(&mut wave, 0, &mut Vec::new())?;
    Ok(wave)
}

/// Final-state summary of one branch propagation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchSummary {
    pub branch: Branch,
    pub phi0: f64,
    pub sample: usize,
    /// Interaction-frame displacement `[α_c, α_s]` at `t_g`.
    pub alpha: [Complex64; 2],
    pub norm: f64,
    /// Covariance eigenvalue ratio per mode (1 for coherent states).
    pub squeezing: [f64; 2],
    pub max_displacement: f64,
    pub max_leakage: f64,
}

/// φ₀- and sample-averaged full-solver gate figures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullGateResult {
    pub bell_error: f64,
    pub phi_half: f64,
    /// Differential phase read from the averaged overlaps.
    pub entangling_phase: f64,
    pub omega_peak: f64,
    pub grid: MotionalGrid,
    pub steps: usize,
    pub time_step: f64,
    pub max_displacement: f64,
    pub squeezing: f64,
    pub boundary_leakage: f64,
    pub norm_drift: f64,
    pub overlaps: Overlaps,
    pub branches: Vec<BranchSummary>,
}

struct Job {
    sample: usize,
    phi_index: usize,
    branch: Branch,
}

/// Enlargements tried when an automatically sized grid leaks.
const AUTO_GRID_RETRIES: usize = 3;

/// φ₀-averaged gate error from full propagation of every branch.
///
/// An automatically sized grid is enlarged (extent ×1.3 per retry) when the
/// wavepacket reaches its border; explicit grids are used as given.
pub fn full_gate_error(config: &ValidatedConfig) -> Result<FullGateResult, SolverError> {
    let mut grid = grid_for(config)?;
    let auto = config.options.grid_points.is_none() && config.options.grid_extent.is_none();
    let mut retries = 0;
    loop {
        match full_gate_error_on(config, &grid) {
            Err(SolverError::GridTooSmall { .. }) if auto && retries < AUTO_GRID_RETRIES => {
                retries += 1;
                grid = MotionalGrid::with_extent(grid.extent.map(|x| 1.3 * x));
            }
            other => return other,
        }
    }
}

pub fn full_gate_error_on(config: &ValidatedConfig, grid: &MotionalGrid) -> Result<FullGateResult, SolverError> {
    let phis = config.options.phi0_grid();
    let n_phi = phis.len();
    let samples = initial_samples(config);
    // Flipping both spins equals φ₀ → φ₀ + π when λ_↑ = −λ_↓.
    let shortcut = config.coupling.is_antisymmetric() && n_phi % 2 == 0;
    let propagated: &[Branch] = if shortcut {
        &[Branch::DownDown, Branch::DownUp]
    } else {
        &Branch::ALL
    };
    let probe = Propagator::new(config, grid)?;
    let (steps, time_step) = (probe.step_count(), probe.max_step());
    drop(probe);

    let mut all_g: Vec<Overlaps> = Vec::with_capacity(samples.len() * n_phi);
    let mut summaries = Vec::new();
    let (mut max_disp, mut max_leak, mut max_drift, mut max_sq) = (0.0f64, 0.0f64, 0.0f64, 1.0f64);
    for (si, alpha0) in samples.iter().enumerate() {
        let jobs: Vec<Job> = (0..n_phi)
            .flat_map(|k| {
                propagated.iter().map(move |&b| Job {
                    sample: si,
                    phi_index: k,
                    branch: b,
                })
            })
            .collect();
        let results: Vec<Result<(BranchWave, RunStats, [(f64, f64, f64); 2]), SolverError>> = jobs
            .par_iter()
            .map(|job| {
                let mut prop = Propagator::new(config, grid)?;
                let phi0 = phis[job.phi_index];
                let mut wave = BranchWave::coherent(grid, job.branch, phi0, *alpha0);
                let stats = prop.run(&mut wave, 0, &mut Vec::new())?;
                let quad = prop.quadratures(&wave);
                Ok((wave, stats, quad))
            })
            .collect();
        let mut waves: Vec<Vec<Option<BranchWave>>> = vec![vec![None, None, None, None]; n_phi];
        for (job, res) in jobs.iter().zip(results) {
            let (wave, stats, quad) = res?;
            let tg = config.gate_time();
            let alpha = Mode::ALL.map(|m| {
                let (q, p) = (quad[m.index()].0, quad[m.index()].1);
                Complex64::new(q, p) / SQRT_2
                    * Complex64::from_polar(1.0, config.trap.angular_frequency(m) * tg)
            });
            let squeezing = [quad[0].2, quad[1].2];
            max_disp = max_disp.max(stats.max_displacement);
            max_leak = max_leak.max(stats.max_leakage);
            max_drift = max_drift.max(stats.norm_drift);
            max_sq = max_sq.max(squeezing[0]).max(squeezing[1]);
            summaries.push(BranchSummary {
                branch: job.branch,
                phi0: phis[job.phi_index],
                sample: job.sample,
                alpha,
                norm: wave.norm(),
                squeezing,
                max_displacement: stats.max_displacement,
                max_leakage: stats.max_leakage,
            });
            waves[job.phi_index][job.branch.index()] = Some(wave);
        }
        if shortcut {
            for k in 0..n_phi {
                let partner = (k + n_phi / 2) % n_phi;
                for b in [Branch::DownDown, Branch::DownUp] {
                    let w = waves[partner][b.index()].as_ref().expect("propagated").clone();
                    waves[k][b.flipped().index()] = Some(BranchWave {
                        branch: b.flipped(),
                        phi0: phis[k],
                        ..w
                    });
                }
            }
        }
        for row in &waves {
            let mut g = fidelity::zero_overlaps();
            for s in 0..4 {
                for p in 0..4 {
                    let ws = row[s].as_ref().expect("branch present");
                    let wp = row[p].as_ref().expect("branch present");
                    g[s][p] = ws.overlap(wp);
                }
            }
            all_g.push(g);
        }
    }
    let g = fidelity::mean_overlaps(&all_g);
    let ramsey = fidelity::analyze(&g, config.pulse.phi_half);
    Ok(FullGateResult {
        bell_error: (1.0 - ramsey.fidelity).clamp(0.0, 1.0),
        phi_half: ramsey.phi_half,
        entangling_phase: fidelity::overlap_entangling_phase(&g),
        omega_peak: config.pulse.omega_peak,
        grid: grid.clone(),
        steps,
        time_step,
        max_displacement: max_disp,
        squeezing: max_sq,
        boundary_leakage: max_leak,
        norm_drift: max_drift,
        overlaps: g,
        branches: summaries,
    })
}

/// Rescale `omega_peak` until the full-solver entangling phase is ±π/2
/// (sign taken from the LD phase), using `phi0_points` φ₀ samples.
pub fn calibrate_full_omega(config: &ValidatedConfig, phi0_points: usize) -> Result<ValidatedConfig, SolverError> {
    Ok(calibrate_full_omega_within(config, phi0_points, 8, 1e-8)?.0)
}

/// [`calibrate_full_omega`] with at most `max_evaluations` full runs, stopping
/// once the phase is within `tolerance` of ±π/2. Returns the runs used.
pub fn calibrate_full_omega_within(
    config: &ValidatedConfig,
    phi0_points: usize,
    max_evaluations: usize,
    tolerance: f64,
) -> Result<(ValidatedConfig, usize), SolverError> {
    let options = SimOptions {
        phi0_grid_size: phi0_points.max(2),
        ..config.options.clone()
    };
    let mut cfg = config.with_options(options)?;
    let ld_phase = ld::entangling_phase(&cfg);
    if ld_phase == 0.0 {
        return Ok((config.clone(), 0));
    }
    let target = FRAC_PI_2.copysign(ld_phase);
    let mut used = 0;
    while used < max_evaluations {
        let r = full_gate_error(&cfg)?;
        used += 1;
        let phase = r.entangling_phase;
        if phase * target <= 0.0 || (phase - target).abs() < tolerance {
            break;
        }
        let omega = cfg.pulse.omega_peak * (target / phase).sqrt();
        cfg = cfg.with_omega_peak(omega);
    }
    Ok((config.with_omega_peak(cfg.pulse.omega_peak), used))
}
