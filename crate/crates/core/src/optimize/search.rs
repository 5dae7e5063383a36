use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::golden::golden_section;
use super::nelder_mead::{self, NelderMeadOptions};
use crate::config::{config_hash, sha256_json};
use crate::error::{ConfigError, OptimizeError, SolverError};
use crate::full;
use crate::ld::LdSolver;
use crate::model::{PulseShape, Segment, SimOptions, SpinCoupling, TrapSpec, ValidatedConfig};

/// Reference area for the area penalty (rad).
pub const AREA_REFERENCE: f64 = TAU;

fn default_edge() -> f64 {
    5e-9
}
fn default_epsilon() -> f64 {
    1e-4
}
fn default_area_weight() -> f64 {
    1e-6
}
fn default_max_evaluations() -> usize {
    2000
}
fn default_restarts() -> usize {
    3
}
fn default_full_budget() -> usize {
    200
}
fn default_refine_top() -> usize {
    3
}
fn default_full_phi0() -> usize {
    8
}
fn default_sensitivity_draws() -> usize {
    100
}

/// Bounds and settings of a symmetric stepped-pulse search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpace {
    pub trap: TrapSpec,
    #[serde(default)]
    pub coupling: SpinCoupling,
    #[serde(default)]
    pub sim: SimOptions,
    /// Number of expanded segments (odd: the centre segment is unpaired).
    pub segments: usize,
    /// Amplitudes fixed to alternating 1/0 with the centre on.
    #[serde(default)]
    pub binary: bool,
    /// Gate time (s); the lower bound when `gate_time_max` is set.
    pub gate_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate_time_max: Option<f64>,
    #[serde(default = "default_edge")]
    pub edge_time: f64,
    /// Shortest allowed segment (s); defaults to the edge time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_duration: Option<f64>,
    #[serde(default)]
    pub amplitude_min: f64,
    /// Beat-note range `[lo, hi]` (Hz).
    pub nu_range: [f64; 2],
    /// Screen bound ε_t on the LD error.
    #[serde(default = "default_epsilon")]
    pub epsilon_t: f64,
    #[serde(default = "default_area_weight")]
    pub area_weight: f64,
    #[serde(default = "default_max_evaluations")]
    pub max_evaluations: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// Full-solver evaluations per refined candidate.
    #[serde(default = "default_full_budget")]
    pub full_budget: usize,
    /// Number of screened candidates refined with the full solver.
    #[serde(default = "default_refine_top")]
    pub refine_top: usize,
    /// φ₀ samples used inside the full-solver refinement loop.
    #[serde(default = "default_full_phi0")]
    pub full_phi0_points: usize,
    #[serde(default = "default_sensitivity_draws")]
    pub sensitivity_draws: usize,
}

impl SearchSpace {
    pub fn new(trap: TrapSpec, segments: usize, gate_time: f64, nu_range: [f64; 2]) -> Self {
        SearchSpace {
            trap,
            coupling: SpinCoupling::default(),
            sim: SimOptions::default(),
            segments,
            binary: false,
            gate_time,
            gate_time_max: None,
            edge_time: default_edge(),
            min_duration: None,
            amplitude_min: 0.0,
            nu_range,
            epsilon_t: default_epsilon(),
            area_weight: default_area_weight(),
            max_evaluations: default_max_evaluations(),
            restarts: default_restarts(),
            full_budget: default_full_budget(),
            refine_top: default_refine_top(),
            full_phi0_points: default_full_phi0(),
            sensitivity_draws: default_sensitivity_draws(),
        }
    }

    pub fn from_toml_str(text: &str, path: &std::path::Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, path)
    }

    pub fn half_count(&self) -> usize {
        self.segments.div_ceil(2)
    }

    fn min_duration(&self) -> f64 {
        self.min_duration.unwrap_or(self.edge_time).max(self.edge_time)
    }

    /// Dimension of the unit-cube parameterization.
    pub fn dimension(&self) -> usize {
        let k = self.half_count();
        k + if self.binary { 0 } else { k } + 1 + usize::from(self.gate_time_max.is_some())
    }

    pub fn check(&self) -> Result<(), OptimizeError> {
        let bad = |m: String| Err(OptimizeError::Space(m));
        if self.segments == 0 || self.segments % 2 == 0 {
            return bad(format!("segments must be odd and positive, got {}", self.segments));
        }
        let [lo, hi] = self.nu_range;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi >= lo) {
            return bad(format!("nu_range must satisfy 0 < lo <= hi, got [{lo}, {hi}]"));
        }
        if !(self.epsilon_t > 0.0) {
            return bad(format!("epsilon_t must be positive, got {}", self.epsilon_t));
        }
        if !(0.0..1.0).contains(&self.amplitude_min) {
            return bad(format!("amplitude_min must lie in [0, 1), got {}", self.amplitude_min));
        }
        let tmax = self.gate_time_max.unwrap_or(self.gate_time);
        if !(self.gate_time.is_finite() && tmax.is_finite() && tmax >= self.gate_time) {
            return bad("gate_time bounds must be finite and ordered".into());
        }
        let need = self.segments as f64 * self.min_duration() + self.edge_time;
        if self.gate_time < need {
            return bad(format!(
                "gate_time {:e} s is shorter than {} segments of {:e} s plus the edge",
                self.gate_time,
                self.segments,
                self.min_duration()
            ));
        }
        if !(self.area_weight >= 0.0) {
            return bad("area_weight must be >= 0".into());
        }
        Ok(())
    }

    fn multiplicity(&self, i: usize) -> f64 {
        if i + 1 == self.half_count() {
            1.0
        } else {
            2.0
        }
    }

    /// Pulse for a point of the unit cube (`omega_peak` left at 1).
    pub fn decode(&self, u: &[f64]) -> PulseShape {
        let k = self.half_count();
        let mut idx = 0;
        let weights = &u[idx..idx + k];
        idx += k;
        let amplitudes: Vec<f64> = if self.binary {
            (0..k).map(|i| if (k - 1 - i) % 2 == 0 { 1.0 } else { 0.0 }).collect()
        } else {
            let raw: Vec<f64> = u[idx..idx + k]
                .iter()
                .map(|v| self.amplitude_min + (1.0 - self.amplitude_min) * v)
                .collect();
            idx += k;
            let max = raw.iter().cloned().fold(0.0, f64::max);
            if max > 0.0 {
                raw.iter().map(|a| a / max).collect()
            } else {
                raw
            }
        };
        let [lo, hi] = self.nu_range;
        let nu = lo + (hi - lo) * u[idx];
        idx += 1;
        let tg = match self.gate_time_max {
            Some(tmax) => self.gate_time + (tmax - self.gate_time) * u[idx],
            None => self.gate_time,
        };
        let dmin = self.min_duration();
        let free = (tg - self.edge_time - self.segments as f64 * dmin).max(0.0);
        let wsum: f64 = (0..k).map(|i| self.multiplicity(i) * weights[i]).sum();
        let durations: Vec<f64> = (0..k)
            .map(|i| {
                let share = if wsum > 0.0 {
                    weights[i] / wsum
                } else {
                    1.0 / self.segments as f64
                };
                dmin + free * share
            })
            .collect();
        PulseShape {
            segments: durations
                .into_iter()
                .zip(amplitudes)
                .map(|(d, a)| Segment::new(d, a))
                .collect(),
            symmetric: true,
            edge_time: self.edge_time,
            omega_peak: 1.0,
            nu,
            phi_half: None,
        }
    }

    /// Unit-cube point reproducing `pulse` (up to `omega_peak`).
    pub fn encode(&self, pulse: &PulseShape) -> Vec<f64> {
        let k = self.half_count();
        let mut u = Vec::with_capacity(self.dimension());
        let dmin = self.min_duration();
        let excess: Vec<f64> = pulse.segments.iter().map(|s| (s.duration - dmin).max(0.0)).collect();
        let emax = excess.iter().cloned().fold(0.0, f64::max);
        for i in 0..k {
            u.push(if emax > 0.0 { excess[i] / emax } else { 1.0 });
        }
        if !self.binary {
            for s in pulse.segments.iter().take(k) {
                let v = (s.amplitude - self.amplitude_min) / (1.0 - self.amplitude_min);
                u.push(v.clamp(0.0, 1.0));
            }
        }
        let [lo, hi] = self.nu_range;
        u.push(if hi > lo { ((pulse.nu - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.0 });
        if let Some(tmax) = self.gate_time_max {
            let tg = pulse.gate_time();
            u.push(if tmax > self.gate_time {
                ((tg - self.gate_time) / (tmax - self.gate_time)).clamp(0.0, 1.0)
            } else {
                0.0
            });
        }
        u
    }

    pub fn config_for(&self, pulse: PulseShape) -> Result<ValidatedConfig, OptimizeError> {
        Ok(ValidatedConfig::new(
            self.trap.clone(),
            pulse,
            self.coupling,
            self.sim.clone(),
        )?)
    }
}

/// One pulse with its scores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub pulse: PulseShape,
    pub ld_error: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_error: Option<f64>,
    pub pulse_area: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<f64>,
    /// Hash of the exact configuration that produced `ld_error`.
    pub config_hash: String,
    pub converged: bool,
    pub evaluations: usize,
    /// Set when a budget ran out before refinement finished.
    #[serde(default)]
    pub budget_exhausted: bool,
}

impl Candidate {
    pub fn gate_time(&self) -> f64 {
        self.pulse.gate_time()
    }

    /// Error used for ranking: full when refined, LD otherwise.
    pub fn best_error(&self) -> f64 {
        self.full_error.unwrap_or(self.ld_error)
    }
}

/// LD error after calibrating |Φ| = π/2, with the calibrated pulse.
pub struct LdScore {
    pub pulse: PulseShape,
    pub error: f64,
    pub area: f64,
    pub config: ValidatedConfig,
}

/// Calibrate Ω in closed form (Φ ∝ Ω²) and evaluate the LD error.
pub fn ld_score(space_cfg: &ValidatedConfig) -> Result<LdScore, OptimizeError> {
    let solver = LdSolver::new(space_cfg);
    let omega_ref = TAU / space_cfg.gate_time();
    let phase_ref = solver.mean_entangling_phase(omega_ref);
    if !(phase_ref.abs() >= 1e-12) {
        return Err(OptimizeError::NoDifferentialDrive { phase: phase_ref });
    }
    let omega = omega_ref * (FRAC_PI_2 / phase_ref.abs()).sqrt();
    let result = solver.gate_result_at(omega);
    let pulse = space_cfg.pulse.with_omega_peak(omega);
    let config = space_cfg.with_omega_peak(omega);
    Ok(LdScore {
        area: result.pulse_area,
        error: result.bell_error,
        pulse,
        config,
    })
}

fn candidate_from(score: LdScore, converged: bool, evaluations: usize) -> Candidate {
    Candidate {
        config_hash: config_hash(&score.config),
        pulse: score.pulse,
        ld_error: score.error,
        full_error: None,
        pulse_area: score.area,
        sensitivity: None,
        converged,
        evaluations,
        budget_exhausted: false,
    }
}

/// Worst-case objective for points without a valid pulse.
const PENALTY: f64 = 10.0;

fn objective(space: &SearchSpace, u: &[f64]) -> f64 {
    let pulse = space.decode(u);
    let Ok(cfg) = space.config_for(pulse) else {
        return PENALTY;
    };
    match ld_score(&cfg) {
        Ok(s) => s.error + space.area_weight * s.area / AREA_REFERENCE,
        Err(_) => PENALTY,
    }
}

/// `count` uniform random pulses within the space, each LD-scored.
pub fn seed_candidates(space: &SearchSpace, count: usize, rng_seed: u64) -> Result<Vec<Candidate>, OptimizeError> {
    space.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let dim = space.dimension();
    let points: Vec<Vec<f64>> = (0..count)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let scored: Vec<Option<Candidate>> = points
        .par_iter()
        .map(|u| {
            let cfg = space.config_for(space.decode(u)).ok()?;
            let score = ld_score(&cfg).ok()?;
            Some(candidate_from(score, false, 1))
        })
        .collect();
    Ok(scored.into_iter().flatten().collect())
}

/// Simplex descent of `ld_error + w·area/area_ref` from `candidate`.
pub fn local_optimize(space: &SearchSpace, candidate: &Candidate) -> Result<Candidate, OptimizeError> {
    space.check()?;
    let x0 = space.encode(&candidate.pulse);
    let opts = NelderMeadOptions {
        max_evaluations: space.max_evaluations,
        restarts: space.restarts,
        ..NelderMeadOptions::default()
    };
    let r = nelder_mead::minimize(|u| objective(space, u), &x0, &opts);
    let cfg = space.config_for(space.decode(&r.x))?;
    let score = ld_score(&cfg)?;
    Ok(candidate_from(score, r.converged, r.evaluations))
}

fn with_phi0_points(cfg: &ValidatedConfig, n: usize) -> Result<ValidatedConfig, OptimizeError> {
    let options = SimOptions {
        phi0_grid_size: n.max(2),
        ..cfg.options.clone()
    };
    Ok(cfg.with_options(options)?)
}

fn full_error_of(cfg: &ValidatedConfig) -> Result<f64, SolverError> {
    Ok(full::full_gate_error(cfg)?.bell_error)
}

/// Full-solver evaluation and refinement of screened candidates.
///
/// Every candidate is evaluated once; the best `space.refine_top` are then
/// re-optimized by coordinate descent over ν, then Ω, then a simplex pass over
/// all parameters, within `budget` full-solver calls each.
pub fn refine_full(space: &SearchSpace, candidates: &[Candidate], budget: usize) -> Result<Vec<Candidate>, OptimizeError> {
    let mut out: Vec<Candidate> = Vec::with_capacity(candidates.len());
    for c in candidates {
        assert!(
            c.ld_error < space.epsilon_t,
            "refine_full received an unscreened candidate (ld_error {:e})",
            c.ld_error
        );
        let cfg = space.config_for(c.pulse.clone())?;
        let mut refined = c.clone();
        refined.full_error = Some(full_error_of(&cfg)?);
        out.push(refined);
    }
    let mut order: Vec<usize> = (0..out.len()).collect();
    order.sort_by(|&a, &b| out[a].best_error().total_cmp(&out[b].best_error()));
    for &i in order.iter().take(space.refine_top) {
        out[i] = refine_one(space, &out[i], budget)?;
    }
    Ok(out)
}

fn refine_one(space: &SearchSpace, cand: &Candidate, budget: usize) -> Result<Candidate, OptimizeError> {
    let base = space.config_for(cand.pulse.clone())?;
    let coarse = with_phi0_points(&base, space.full_phi0_points)?;
    let mut used = 0usize;
    let mut best_pulse = cand.pulse.clone();
    let mut exhausted = false;

    // Ω: match the full-solver entangling phase.
    if budget >= 4 {
        let (cal, n) = full::calibrate_full_omega_within(&coarse, space.full_phi0_points, 3, 1e-4)?;
        used += n;
        best_pulse = best_pulse.with_omega_peak(cal.pulse.omega_peak);
    }
    let eval = |pulse: &PulseShape| -> Result<f64, SolverError> {
        let cfg = coarse.with_pulse(pulse.clone())?;
        full_error_of(&cfg)
    };
    let mut best = eval(&best_pulse)?;
    used += 1;

    // ν, then Ω, each by golden section in a narrow bracket.
    let stage = budget.saturating_sub(used) / 4;
    if stage >= 3 {
        let nu0 = best_pulse.nu;
        let span = 0.004 * nu0;
        let (nu, v, n) = golden_section(|nu| eval(&best_pulse.with_nu(nu)), nu0 - span, nu0 + span, stage)?;
        used += n;
        if v < best {
            best = v;
            best_pulse = best_pulse.with_nu(nu);
        }
        let om0 = best_pulse.omega_peak;
        let (om, v, n) = golden_section(
            |om| eval(&best_pulse.with_omega_peak(om)),
            0.97 * om0,
            1.03 * om0,
            stage,
        )?;
        used += n;
        if v < best {
            best = v;
            best_pulse = best_pulse.with_omega_peak(om);
        }
    } else {
        exhausted = true;
    }

    // Everything: simplex in the unit cube plus a relative Ω factor.
    let remaining = budget.saturating_sub(used);
    if remaining > space.dimension() + 2 {
        let x0 = space.encode(&best_pulse);
        let om0 = best_pulse.omega_peak;
        let mut start = x0.clone();
        start.push(0.5);
        let mut error: Option<SolverError> = None;
        let r = nelder_mead::minimize(
            |u| {
                let (shape, om) = u.split_at(u.len() - 1);
                let pulse = space.decode(shape).with_omega_peak(om0 * (0.95 + 0.1 * om[0]));
                match eval(&pulse) {
                    Ok(v) => v,
                    Err(e) => {
                        error.get_or_insert(e);
                        PENALTY
                    }
                }
            },
            &start,
            &NelderMeadOptions {
                max_evaluations: remaining,
                initial_step: 0.02,
                restarts: 0,
                tolerance: 1e-4,
            },
        );
        if let Some(e) = error {
            return Err(e.into());
        }
        used += r.evaluations;
        if r.value < best {
            let (shape, om) = r.x.split_at(r.x.len() - 1);
            best_pulse = space.decode(shape).with_omega_peak(om0 * (0.95 + 0.1 * om[0]));
        }
        exhausted |= !r.converged;
    } else {
        exhausted = true;
    }

    // Final figures on the configured φ₀ grid.
    let final_cfg = base.with_pulse(best_pulse.clone())?;
    let full_error = full_error_of(&final_cfg)?;
    let ld = LdSolver::new(&final_cfg).gate_result();
    Ok(Candidate {
        config_hash: config_hash(&final_cfg),
        pulse: best_pulse,
        ld_error: ld.bell_error,
        full_error: Some(full_error),
        pulse_area: ld.pulse_area,
        sensitivity: cand.sensitivity,
        converged: cand.converged,
        evaluations: cand.evaluations + used + 1,
        budget_exhausted: exhausted,
    })
}

/// Jitter model for [`sensitivity`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jitter {
    /// Standard deviation of each segment duration (s).
    pub sigma_t: f64,
    /// Relative standard deviation of each segment amplitude.
    pub sigma_a: f64,
    pub draws: usize,
    pub seed: u64,
}

impl Default for Jitter {
    fn default() -> Self {
        Jitter {
            sigma_t: 0.2e-9,
            sigma_a: 0.002,
            draws: 100,
            seed: 0,
        }
    }
}

/// Mean LD error increase under independent jitter of every expanded segment.
///
/// Ω and the analysis phase stay at their unperturbed values.
pub fn sensitivity(config: &ValidatedConfig, jitter: &Jitter) -> Result<f64, OptimizeError> {
    let nominal = LdSolver::new(config).gate_result();
    if jitter.draws == 0 || (jitter.sigma_t == 0.0 && jitter.sigma_a == 0.0) {
        return Ok(0.0);
    }
    let phi_half = config.pulse.phi_half.unwrap_or(nominal.phi_half);
    let segments = config.pulse.expanded_segments();
    let mut rng = ChaCha8Rng::seed_from_u64(jitter.seed);
    let dt = Normal::new(0.0, jitter.sigma_t.max(0.0)).map_err(|e| OptimizeError::Space(e.to_string()))?;
    let da = Normal::new(0.0, jitter.sigma_a.max(0.0)).map_err(|e| OptimizeError::Space(e.to_string()))?;
    let mut total = 0.0;
    for _ in 0..jitter.draws {
        let perturbed: Vec<Segment> = segments
            .iter()
            .map(|s| {
                let d = (s.duration + dt.sample(&mut rng)).max(config.pulse.edge_time);
                let a = (s.amplitude * (1.0 + da.sample(&mut rng))).max(0.0);
                Segment::new(d, a)
            })
            .collect();
        let peak = perturbed.iter().map(|s| s.amplitude).fold(0.0, f64::max);
        let pulse = PulseShape {
            segments: perturbed
                .iter()
                .map(|s| Segment::new(s.duration, if peak > 0.0 { s.amplitude / peak } else { 0.0 }))
                .collect(),
            symmetric: false,
            omega_peak: config.pulse.omega_peak * peak,
            phi_half: Some(phi_half),
            ..config.pulse.clone()
        };
        let cfg = config.with_pulse(pulse)?;
        total += LdSolver::new(&cfg).gate_result().bell_error;
    }
    Ok(total / jitter.draws as f64 - nominal.bell_error)
}

fn dominates(a: &[f64; 3], b: &[f64; 3]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

fn objectives(c: &Candidate) -> [f64; 3] {
    [c.best_error(), c.pulse_area, c.sensitivity.unwrap_or(0.0)]
}

fn lexicographic(a: &Candidate, b: &Candidate) -> Ordering {
    a.best_error()
        .total_cmp(&b.best_error())
        .then(a.pulse_area.total_cmp(&b.pulse_area))
        .then_with(|| a.config_hash.cmp(&b.config_hash))
}

/// Non-dominated set over (error, area, sensitivity), sorted lexicographically.
pub fn pareto_select(candidates: &[Candidate]) -> Vec<Candidate> {
    let objs: Vec<[f64; 3]> = candidates.iter().map(objectives).collect();
    let mut front: Vec<Candidate> = candidates
        .iter()
        .enumerate()
        .filter(|(i, _)| !objs.iter().enumerate().any(|(j, o)| j != *i && dominates(o, &objs[*i])))
        .map(|(_, c)| c.clone())
        .collect();
    front.sort_by(lexicographic);
    front.dedup_by(|a, b| a.config_hash == b.config_hash);
    front
}

/// Output of the whole search pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionSet {
    pub space_hash: String,
    pub rng_seed: u64,
    pub seeds: usize,
    pub screened: usize,
    pub solutions: Vec<Candidate>,
}

/// Seed, locally optimize, screen at ε_t, refine, score sensitivity, select.
pub fn run_search(space: &SearchSpace, seeds: usize, rng_seed: u64) -> Result<SolutionSet, OptimizeError> {
    space.check()?;
    let seeded = seed_candidates(space, seeds, rng_seed)?;
    let optimized: Vec<Candidate> = seeded
        .par_iter()
        .map(|c| local_optimize(space, c))
        .collect::<Result<_, _>>()?;
    let mut screened: Vec<Candidate> = optimized
        .into_iter()
        .filter(|c| c.ld_error < space.epsilon_t)
        .collect();
    screened.sort_by(lexicographic);
    screened.dedup_by(|a, b| a.config_hash == b.config_hash);
    let n_screened = screened.len();
    let mut refined = if space.full_budget > 0 {
        refine_full(space, &screened, space.full_budget)?
    } else {
        screened
    };
    let jitter = Jitter {
        draws: space.sensitivity_draws,
        seed: rng_seed,
        ..Jitter::default()
    };
    for c in refined.iter_mut() {
        let cfg = space.config_for(c.pulse.clone())?;
        c.sensitivity = Some(sensitivity(&cfg, &jitter)?);
    }
    Ok(SolutionSet {
        space_hash: hex::encode(sha256_json(space)),
        rng_seed,
        seeds,
        screened: n_screened,
        solutions: pareto_select(&refined),
    })
}
