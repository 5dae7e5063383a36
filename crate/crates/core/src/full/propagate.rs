use std::f64::consts::{SQRT_2, TAU};

use num_complex::Complex64;

use super::grid::{Fft2, MotionalGrid};
use super::BranchWave;
use crate::error::SolverError;
use crate::model::{Branch, Mode, ValidatedConfig};

/// Boundary probability above which propagation aborts.
pub const LEAKAGE_LIMIT: f64 = 1e-6;
/// Steps between boundary checks.
pub const CHECK_INTERVAL: usize = 8;
/// Default bound on `max(ω_s, 2πν, Ω Σ|λ|) · dt`.
pub const DEFAULT_STEP_PHASE: f64 = 0.03;
/// Audit bound on `max|V| · dt`.
pub const MAX_POTENTIAL_PHASE: f64 = 0.1;
/// Audit bound on `max(ω_s, 2πν) · dt`.
pub const MAX_OSCILLATION_PHASE: f64 = 0.3;

fn potential_bound(config: &ValidatedConfig) -> f64 {
    config.pulse.omega_peak * (config.coupling.lambda_down.abs() + config.coupling.lambda_up.abs())
}

fn oscillation_rate(config: &ValidatedConfig) -> f64 {
    config
        .trap
        .angular_frequency(Mode::Stretch)
        .max(TAU * config.pulse.nu)
}

/// Largest step with every phase rate times `dt` at most 0.03 rad.
pub fn default_time_step(config: &ValidatedConfig) -> f64 {
    DEFAULT_STEP_PHASE / oscillation_rate(config).max(potential_bound(config))
}

pub fn audit_time_step(config: &ValidatedConfig, dt: f64) -> Result<(), SolverError> {
    let v = potential_bound(config) * dt;
    if v > MAX_POTENTIAL_PHASE {
        return Err(SolverError::StepAudit(format!(
            "potential phase per step {v:.3} rad exceeds {MAX_POTENTIAL_PHASE} (dt = {dt:e} s)"
        )));
    }
    let w = oscillation_rate(config) * dt;
    if w > MAX_OSCILLATION_PHASE {
        return Err(SolverError::StepAudit(format!(
            "oscillation phase per step {w:.3} rad exceeds {MAX_OSCILLATION_PHASE} (dt = {dt:e} s)"
        )));
    }
    Ok(())
}

/// Step midpoints and lengths, with envelope breakpoints on step boundaries.
pub fn time_steps(config: &ValidatedConfig, dt_max: f64) -> Vec<(f64, f64)> {
    let bps = config.envelope().breakpoints();
    let mut steps = Vec::new();
    for w in bps.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        let n = (len / dt_max * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let dt = len / n as f64;
        for i in 0..n {
            steps.push((w[0] + (i as f64 + 0.5) * dt, dt));
        }
    }
    steps
}

/// Diagnostics of one propagation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunStats {
    pub steps: usize,
    pub max_leakage: f64,
    /// Largest `|⟨q⟩ + i⟨p⟩|/√2` seen at checkpoints.
    pub max_displacement: f64,
    pub norm_drift: f64,
}

/// Probability density snapshot `|ψ|²` in `[c][s]` order.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub density: Vec<f64>,
}

/// Strang-split propagator for one configuration on one grid.
///
/// Harmonic motion is factored exactly as
/// `e^{-iωdt(p²+q²)/2} = e^{-i tan(ωdt/2) q²/2} e^{-i sin(ωdt) p²/2} e^{-i tan(ωdt/2) q²/2}`,
/// and the potential half-steps are merged with the position kicks.
pub struct Propagator<'a> {
    config: &'a ValidatedConfig,
    grid: MotionalGrid,
    fft: Fft2,
    q: [Vec<f64>; 2],
    p: [Vec<f64>; 2],
    /// `e^{i√2 η_m q_m}` per axis.
    phase_c: Vec<Complex64>,
    phase_s: Vec<Complex64>,
    border_q: [Vec<bool>; 2],
    border_p: [Vec<bool>; 2],
    steps: Vec<(f64, f64)>,
    // Scratch per-axis factors.
    row_c: Vec<Complex64>,
    row_s: Vec<Complex64>,
    mix_s: Vec<Complex64>,
}

impl<'a> Propagator<'a> {
    pub fn new(config: &'a ValidatedConfig, grid: &MotionalGrid) -> Result<Self, SolverError> {
        let dt = config.options.time_step.unwrap_or_else(|| default_time_step(config));
        audit_time_step(config, dt)?;
        let q = [grid.positions(0), grid.positions(1)];
        let p = [grid.momenta(0), grid.momenta(1)];
        let kappa = Mode::ALL.map(|m| SQRT_2 * config.trap.lamb_dicke(m));
        let phase_c = q[0].iter().map(|&x| Complex64::from_polar(1.0, kappa[0] * x)).collect();
        let phase_s = q[1].iter().map(|&x| Complex64::from_polar(1.0, kappa[1] * x)).collect();
        let border = |n: usize, fft_order: bool| -> Vec<bool> {
            let w = (n / 16).max(1);
            (0..n)
                .map(|i| {
                    if fft_order {
                        i + w >= n / 2 && i < n / 2 + w
                    } else {
                        i < w || i >= n - w
                    }
                })
                .collect()
        };
        Ok(Propagator {
            config,
            grid: grid.clone(),
            fft: Fft2::new(grid),
            border_q: [border(grid.points[0], false), border(grid.points[1], false)],
            border_p: [border(grid.points[0], true), border(grid.points[1], true)],
            q,
            p,
            phase_c,
            phase_s,
            steps: time_steps(config, dt),
            row_c: vec![Complex64::new(0.0, 0.0); grid.points[0]],
            row_s: vec![Complex64::new(0.0, 0.0); grid.points[1]],
            mix_s: vec![Complex64::new(0.0, 0.0); grid.points[1]],
        })
    }

    pub fn grid(&self) -> &MotionalGrid {
        &self.grid
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    pub fn max_step(&self) -> f64 {
        self.steps.iter().map(|s| s.1).fold(0.0, f64::max)
    }

    /// Multiply by the potential and kick phases of the given half-step
    /// intervals `(start, end)`. The potential is integrated over each
    /// interval with 3-point Gauss-Legendre (the envelope is linear there).
    fn position_phase(&mut self, data: &mut [Complex64], branch: Branch, phi0: f64, halves: &[(f64, f64)]) {
        const GL3: [(f64, f64); 3] = [
            (-0.774_596_669_241_483_4, 5.0 / 9.0),
            (0.0, 8.0 / 9.0),
            (0.774_596_669_241_483_4, 5.0 / 9.0),
        ];
        let cfg = self.config;
        let lambdas = cfg.coupling.branch_lambdas(branch);
        let theta = cfg.geometry.theta;
        let wc = cfg.trap.angular_frequency(Mode::Com);
        let ws = cfg.trap.angular_frequency(Mode::Stretch);
        let beat = TAU * cfg.pulse.nu;
        let mut drive = Complex64::new(0.0, 0.0);
        let (mut kick_c, mut kick_s) = (0.0, 0.0);
        for &(a, b) in halves {
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for (x, wt) in GL3 {
                let t = mid + half * x;
                drive += Complex64::from_polar(cfg.rabi(t) * wt * half, -(beat * t + phi0));
            }
            kick_c += 0.5 * (wc * (b - a)).tan();
            kick_s += 0.5 * (ws * (b - a)).tan();
        }
        let mut w = [Complex64::new(0.0, 0.0); 2];
        for j in 0..2 {
            w[j] = drive * Complex64::from_polar(lambdas[j], theta[j]);
        }
        for (i, &x) in self.q[0].iter().enumerate() {
            self.row_c[i] = Complex64::from_polar(1.0, -kick_c * x * x);
        }
        for (k, &x) in self.q[1].iter().enumerate() {
            self.row_s[k] = Complex64::from_polar(1.0, -kick_s * x * x);
            let e = self.phase_s[k];
            self.mix_s[k] = w[0] * e + w[1] * e.conj();
        }
        let ns = self.grid.points[1];
        for (i, row) in data.chunks_exact_mut(ns).enumerate() {
            let pc = self.phase_c[i];
            let rc = self.row_c[i];
            for (k, v) in row.iter_mut().enumerate() {
                let phase = -(pc * self.mix_s[k]).re;
                let (s, c) = phase.sin_cos();
                *v *= Complex64::new(c, s) * (rc * self.row_s[k]);
            }
        }
    }

    /// Drift phase in momentum space (`[s][c]` layout), including FFT scaling.
    fn momentum_phase(&mut self, data: &mut [Complex64], dt: f64) {
        let cfg = self.config;
        let sc = 0.5 * (cfg.trap.angular_frequency(Mode::Com) * dt).sin();
        let ss = 0.5 * (cfg.trap.angular_frequency(Mode::Stretch) * dt).sin();
        let scale = self.fft.round_trip_scale();
        for (i, &p) in self.p[0].iter().enumerate() {
            self.row_c[i] = Complex64::from_polar(scale, -sc * p * p);
        }
        for (k, &p) in self.p[1].iter().enumerate() {
            self.row_s[k] = Complex64::from_polar(1.0, -ss * p * p);
        }
        let nc = self.grid.points[0];
        for (k, row) in data.chunks_exact_mut(nc).enumerate() {
            let rs = self.row_s[k];
            for (i, v) in row.iter_mut().enumerate() {
                *v *= self.row_c[i] * rs;
            }
        }
    }

    fn position_moments(&self, data: &[Complex64]) -> (f64, [f64; 2], f64) {
        let ns = self.grid.points[1];
        let mut total = 0.0;
        let mut mean = [0.0; 2];
        let mut border = 0.0;
        for (i, row) in data.chunks_exact(ns).enumerate() {
            let bc = self.border_q[0][i];
            let mut row_sum = 0.0;
            for (k, v) in row.iter().enumerate() {
                let d = v.norm_sqr();
                row_sum += d;
                mean[1] += d * self.q[1][k];
                if bc || self.border_q[1][k] {
                    border += d;
                }
            }
            total += row_sum;
            mean[0] += row_sum * self.q[0][i];
        }
        (total, [mean[0] / total, mean[1] / total], border / total)
    }

    /// Moments of unnormalized momentum data in `[s][c]` layout.
    fn momentum_moments(&self, data: &[Complex64]) -> ([f64; 2], f64) {
        let nc = self.grid.points[0];
        let mut total = 0.0;
        let mut mean = [0.0; 2];
        let mut border = 0.0;
        for (k, row) in data.chunks_exact(nc).enumerate() {
            let bs = self.border_p[1][k];
            let mut row_sum = 0.0;
            for (i, v) in row.iter().enumerate() {
                let d = v.norm_sqr();
                row_sum += d;
                mean[0] += d * self.p[0][i];
                if bs || self.border_p[0][i] {
                    border += d;
                }
            }
            total += row_sum;
            mean[1] += row_sum * self.p[1][k];
        }
        ([mean[0] / total, mean[1] / total], border / total)
    }

    fn leakage_error(&self, leakage: f64) -> SolverError {
        SolverError::GridTooSmall {
            leakage,
            limit: LEAKAGE_LIMIT,
            points: self.grid.points,
            extent: self.grid.extent,
        }
    }

    /// Propagate `wave` over the whole pulse; optionally record `|ψ|²` every
    /// `snapshot_every` steps (and at the end).
    pub fn run(
        &mut self,
        wave: &mut BranchWave,
        snapshot_every: usize,
        snapshots: &mut Vec<Snapshot>,
    ) -> Result<RunStats, SolverError> {
        assert_eq!(wave.grid, self.grid, "wave and propagator grids differ");
        let branch = wave.branch;
        let phi0 = wave.phi0;
        let n = self.steps.len();
        let mut stats = RunStats {
            steps: n,
            ..RunStats::default()
        };
        let mut data = std::mem::take(&mut wave.data);
        if snapshot_every > 0 {
            snapshots.push(Snapshot {
                time: 0.0,
                density: data.iter().map(|v| v.norm_sqr()).collect(),
            });
        }
        let first_half = |(mid, dt): (f64, f64)| (mid - 0.5 * dt, mid);
        let second_half = |(mid, dt): (f64, f64)| (mid, mid + 0.5 * dt);
        self.position_phase(&mut data, branch, phi0, &[first_half(self.steps[0])]);
        let mut mean_p = [0.0; 2];
        for k in 0..n {
            let (mid, dt) = self.steps[k];
            let check = k % CHECK_INTERVAL == 0 || k + 1 == n;
            self.fft.forward(&mut data);
            if check {
                let (mp, leak) = self.momentum_moments(&data);
                mean_p = mp;
                stats.max_leakage = stats.max_leakage.max(leak);
                if leak > LEAKAGE_LIMIT {
                    return Err(self.leakage_error(leak));
                }
            }
            self.momentum_phase(&mut data, dt);
            self.fft.inverse(&mut data);
            if check {
                let (norm, mean_q, leak) = self.position_moments(&data);
                stats.max_leakage = stats.max_leakage.max(leak);
                stats.norm_drift = stats.norm_drift.max((norm - 1.0).abs());
                wave.norm_history.push(norm);
                if leak > LEAKAGE_LIMIT {
                    return Err(self.leakage_error(leak));
                }
                for m in 0..2 {
                    let a = (mean_q[m].powi(2) + mean_p[m].powi(2)).sqrt() / SQRT_2;
                    stats.max_displacement = stats.max_displacement.max(a);
                }
            }
            if k + 1 < n {
                let next = first_half(self.steps[k + 1]);
                self.position_phase(&mut data, branch, phi0, &[second_half((mid, dt)), next]);
            } else {
                self.position_phase(&mut data, branch, phi0, &[second_half((mid, dt))]);
            }
            if snapshot_every > 0 && ((k + 1) % snapshot_every == 0 || k + 1 == n) {
                snapshots.push(Snapshot {
                    time: mid + 0.5 * dt,
                    density: data.iter().map(|v| v.norm_sqr()).collect(),
                });
            }
        }
        wave.data = data;
        Ok(stats)
    }

    /// Moments `⟨q⟩, ⟨p⟩` and covariance eigenvalue ratio per mode.
    pub fn quadratures(&mut self, wave: &BranchWave) -> [(f64, f64, f64); 2] {
        let ns = self.grid.points[1];
        let nc = self.grid.points[0];
        let data = &wave.data;
        let norm: f64 = data.iter().map(|v| v.norm_sqr()).sum();
        // p_m ψ via spectral differentiation.
        let mut out = [(0.0, 0.0, 1.0); 2];
        let scale = self.fft.round_trip_scale();
        for m in 0..2 {
            let mut buf = data.clone();
            self.fft.forward(&mut buf);
            for (k, row) in buf.chunks_exact_mut(nc).enumerate() {
                for (i, v) in row.iter_mut().enumerate() {
                    let p = if m == 0 { self.p[0][i] } else { self.p[1][k] };
                    *v *= p * scale;
                }
            }
            self.fft.inverse(&mut buf);
            let (mut mq, mut mp, mut qq, mut pp, mut qp) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for i in 0..nc {
                for k in 0..ns {
                    let idx = i * ns + k;
                    let q = if m == 0 { self.q[0][i] } else { self.q[1][k] };
                    let psi = data[idx];
                    let ppsi = buf[idx];
                    mq += q * psi.norm_sqr();
                    qq += q * q * psi.norm_sqr();
                    mp += (psi.conj() * ppsi).re;
                    pp += ppsi.norm_sqr();
                    qp += q * (psi.conj() * ppsi).re;
                }
            }
            let (mq, mp, qq, pp, qp) = (mq / norm, mp / norm, qq / norm, pp / norm, qp / norm);
            let vq = qq - mq * mq;
            let vp = pp - mp * mp;
            let cqp = qp - mq * mp;
            let tr = vq + vp;
            let det = (vq * vp - cqp * cqp).max(0.0);
            let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
            let hi = 0.5 * tr + disc;
            let lo = (0.5 * tr - disc).max(1e-300);
            out[m] = (mq, mp, hi / lo);
        }
        out
    }
}
