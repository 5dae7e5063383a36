use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::stream::SampleStream;
use crate::error::WaveformError;
use crate::model::Segment;

/// Uniformly sampled record `(t, amplitude)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl Trace {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self, WaveformError> {
        if times.len() != values.len() || times.len() < 8 {
            return Err(WaveformError::Format(format!(
                "trace needs at least 8 (t, amplitude) rows, got {}",
                times.len().min(values.len())
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(WaveformError::Format("trace times must increase strictly".into()));
        }
        if times.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(WaveformError::Format("trace contains non-finite values".into()));
        }
        Ok(Trace { times, values })
    }

    /// Sample `k` of the stream at the centre of its interval.
    pub fn from_stream(stream: &SampleStream) -> Self {
        Trace {
            times: (0..stream.len()).map(|k| (k as f64 + 0.5) / stream.rate).collect(),
            values: stream.samples.clone(),
        }
    }

    /// Median sample spacing (s).
    pub fn sample_period(&self) -> f64 {
        let mut d: Vec<f64> = self.times.windows(2).map(|w| w[1] - w[0]).collect();
        median(&mut d)
    }
}

pub(crate) fn parse_columns(text: &str) -> Result<Vec<(f64, f64)>, WaveformError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| WaveformError::Format(format!("line {}: '{s}': {e}", i + 1)))
        };
        match cols.as_slice() {
            [a, b] => rows.push((parse(a)?, parse(b)?)),
            _ => {
                return Err(WaveformError::Format(format!(
                    "line {}: expected two columns, found {}",
                    i + 1,
                    cols.len()
                )))
            }
        }
    }
    Ok(rows)
}

/// Read a two-column text trace (`t amplitude`).
pub fn read_trace(path: &Path) -> Result<Trace, WaveformError> {
    let text = std::fs::read_to_string(path)?;
    let rows = parse_columns(&text)?;
    Trace::new(rows.iter().map(|r| r.0).collect(), rows.iter().map(|r| r.1).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Mismatch when the residual RMS exceeds this multiple of the noise estimate.
    pub mismatch_ratio: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 200,
            mismatch_ratio: 1.5,
        }
    }
}

/// Fitted segmented envelope with one-sigma standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    /// Absolute segment levels in trace units.
    pub amplitudes: Vec<f64>,
    pub amplitude_errors: Vec<f64>,
    /// Edge-centre times (s), one more than the segment count.
    pub edge_centres: Vec<f64>,
    pub edge_centre_errors: Vec<f64>,
    pub durations: Vec<f64>,
    pub duration_errors: Vec<f64>,
    pub edge_time: f64,
    pub edge_time_error: f64,
    pub residual_rms: f64,
    /// Noise level estimated from the trace itself (MAD of differences).
    pub noise_estimate: f64,
    pub iterations: usize,
}

impl EnvelopeFit {
    /// Segments with amplitudes normalized to a maximum of 1.
    pub fn segments(&self) -> Vec<Segment> {
        let peak = self.amplitudes.iter().cloned().fold(0.0, f64::max);
        self.durations
            .iter()
            .zip(&self.amplitudes)
            .map(|(&d, &a)| Segment::new(d, if peak > 0.0 { a / peak } else { 0.0 }))
            .collect()
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Robust white-noise σ from the median absolute deviation of first differences.
fn noise_sigma(y: &[f64]) -> f64 {
    let mut d: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let m = median(&mut d.clone());
    for v in d.iter_mut() {
        *v = (*v - m).abs();
    }
    1.4826 * median(&mut d) / std::f64::consts::SQRT_2
}

/// Least-squares split of `y` into `pieces` constant runs; returns the run starts.
fn segment_runs(y: &[f64], pieces: usize) -> Vec<usize> {
    let m = y.len();
    let mut s1 = vec![0.0; m + 1];
    let mut s2 = vec![0.0; m + 1];
    for i in 0..m {
        s1[i + 1] = s1[i] + y[i];
        s2[i + 1] = s2[i] + y[i] * y[i];
    }
    let cost = |i: usize, j: usize| -> f64 {
        let n = (j - i) as f64;
        let s = s1[j] - s1[i];
        s2[j] - s2[i] - s * s / n
    };
    let inf = f64::INFINITY;
    let mut dp = vec![vec![inf; m + 1]; pieces + 1];
    let mut arg = vec![vec![0usize; m + 1]; pieces + 1];
    dp[0][0] = 0.0;
    for k in 1..=pieces {
        for j in k..=m {
            for i in (k - 1)..j {
                let v = dp[k - 1][i] + cost(i, j);
                if v < dp[k][j] {
                    dp[k][j] = v;
                    arg[k][j] = i;
                }
            }
        }
    }
    let mut starts = vec![0; pieces];
    let mut j = m;
    for k in (1..=pieces).rev() {
        starts[k - 1] = arg[k][j];
        j = arg[k][j];
    }
    starts
}

fn ramp(x: f64) -> f64 {
    (x + 0.5).clamp(0.0, 1.0)
}

/// Model `Σ_i (a_{i+1} − a_i)·ramp((t − c_i)/w)` with `a_0 = a_{n+1} = 0`.
///
/// Parameter layout: `[a_1..a_n, c_0..c_n, w]`, times in sample periods.
fn model(p: &[f64], n: usize, t: &[f64], jac: Option<&mut DMatrix<f64>>) -> Vec<f64> {
    let a = |i: usize| if i == 0 || i == n + 1 { 0.0 } else { p[i - 1] };
    let w = p[2 * n + 1];
    let mut out = vec![0.0; t.len()];
    let mut jac = jac;
    for (k, &tk) in t.iter().enumerate() {
        let mut v = 0.0;
        for i in 0..=n {
            let step = a(i + 1) - a(i);
            let x = (tk - p[n + i]) / w;
            let r = ramp(x);
            v += step * r;
            if let Some(j) = jac.as_deref_mut() {
                if i >= 1 {
                    j[(k, i - 1)] -= r;
                }
                if i < n {
                    j[(k, i)] += r;
                }
                if x.abs() < 0.5 {
                    j[(k, n + i)] = -step / w;
                    j[(k, 2 * n + 1)] -= step * x / w;
                }
            }
        }
        out[k] = v;
    }
    out
}

/// Fit an `n`-segment envelope with linear edges to `trace`.
pub fn fit_envelope(trace: &Trace, segments: usize, opts: &FitOptions) -> Result<EnvelopeFit, WaveformError> {
    let n = segments;
    let m = trace.values.len();
    let npar = 2 * n + 2;
    if n == 0 || m < npar + 2 {
        return Err(WaveformError::ModelMismatch(format!(
            "{m} samples cannot constrain {n} segments"
        )));
    }
    let tau = trace.sample_period();
    let t0 = trace.times[0];
    let t: Vec<f64> = trace.times.iter().map(|x| (x - t0) / tau).collect();
    let y = &trace.values;
    let sigma = noise_sigma(y);
    let peak = y.iter().cloned().fold(0.0, f64::max);

    // Initial guess from a piecewise-constant split padded with zero baselines.
    let mut padded = Vec::with_capacity(m + 2);
    padded.push(0.0);
    padded.extend_from_slice(y);
    padded.push(0.0);
    let starts = segment_runs(&padded, n + 2);
    let mut p = vec![0.0; npar];
    for i in 0..n {
        let (s, e) = (starts[i + 1], starts.get(i + 2).copied().unwrap_or(m + 2));
        p[i] = padded[s..e].iter().sum::<f64>() / (e - s) as f64;
    }
    for i in 0..=n {
        // Run start `s` in padded indices is trace sample `s − 1`; the edge sits half a sample earlier.
        let s = starts[i + 1] as f64 - 1.0;
        p[n + i] = s - 0.5;
    }
    let min_gap = (1..=n).map(|i| p[n + i] - p[n + i - 1]).fold(f64::INFINITY, f64::min);
    p[2 * n + 1] = 4.0f64.min(0.5 * min_gap).max(1.0);

    let residuals = |p: &[f64]| -> Vec<f64> {
        model(p, n, &t, None)
            .iter()
            .zip(y)
            .map(|(mv, yv)| mv - yv)
            .collect()
    };
    let sse = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();

    let mut r = residuals(&p);
    let mut cost = sse(&r);
    let mut mu = 1e-3;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let mut jm = DMatrix::zeros(m, npar);
        model(&p, n, &t, Some(&mut jm));
        let jt = jm.transpose();
        let jtj = &jt * &jm;
        let g = &jt * DVector::from_vec(r.clone());
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for d in 0..npar {
                a[(d, d)] += mu * jtj[(d, d)].max(1e-12);
            }
            let Some(delta) = a.lu().solve(&(-&g)) else {
                mu *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            if trial[2 * n + 1] <= 1e-3 {
                mu *= 10.0;
                continue;
            }
            let rt = residuals(&trial);
            let ct = sse(&rt);
            if ct < cost {
                let rel = (cost - ct) / cost.max(1e-300);
                let step = delta.amax();
                p = trial;
                r = rt;
                cost = ct;
                mu = (mu / 3.0).max(1e-12);
                improved = true;
                if rel < 1e-14 || step < 1e-12 {
                    iterations = opts.max_iterations;
                }
                break;
            }
            mu *= 4.0;
        }
        if !improved {
            break;
        }
    }

    let rms = (cost / m as f64).sqrt();
    if rms > opts.mismatch_ratio * sigma + 1e-7 * peak.max(1e-300) {
        return Err(WaveformError::ModelMismatch(format!(
            "residual RMS {rms:.3e} exceeds {:.1}x the noise estimate {sigma:.3e} for {n} segments",
            opts.mismatch_ratio
        )));
    }

    let mut jm = DMatrix::zeros(m, npar);
    model(&p, n, &t, Some(&mut jm));
    let jtj = jm.transpose() * &jm;
    let s2 = cost / (m - npar) as f64;
    let cov = jtj
        .try_inverse()
        .map(|c| c * s2)
        .unwrap_or_else(|| DMatrix::from_element(npar, npar, f64::INFINITY));
    let se = |i: usize| cov[(i, i)].max(0.0).sqrt();

    let w = p[2 * n + 1];
    for i in 0..n {
        let gap = p[n + i + 1] - p[n + i];
        if gap < w {
            return Err(WaveformError::ModelMismatch(format!(
                "segment {} is shorter than the fitted edge ({:.3} vs {:.3} samples)",
                i + 1,
                gap,
                w
            )));
        }
    }
    for i in 0..=n {
        let left = if i == 0 { 0.0 } else { p[i - 1] };
        let right = if i == n { 0.0 } else { p[i] };
        let var = if i == 0 || i == n {
            se(if i == 0 { 0 } else { n - 1 }).powi(2)
        } else {
            cov[(i - 1, i - 1)] + cov[(i, i)] - 2.0 * cov[(i - 1, i)]
        };
        let floor = 1e-9 * peak.max(1e-300);
        if (right - left).abs() <= (3.0 * var.max(0.0).sqrt()).max(floor) {
            return Err(WaveformError::ModelMismatch(format!(
                "no resolvable step at edge {i} (levels {left:.4} -> {right:.4}); too many segments requested"
            )));
        }
    }

    let edge_centres: Vec<f64> = (0..=n).map(|i| t0 + p[n + i] * tau).collect();
    let edge_centre_errors: Vec<f64> = (0..=n).map(|i| se(n + i) * tau).collect();
    let durations: Vec<f64> = (0..n).map(|i| edge_centres[i + 1] - edge_centres[i]).collect();
    let duration_errors: Vec<f64> = (0..n)
        .map(|i| {
            let (a, b) = (n + i, n + i + 1);
            (cov[(a, a)] + cov[(b, b)] - 2.0 * cov[(a, b)]).max(0.0).sqrt() * tau
        })
        .collect();
    Ok(EnvelopeFit {
        amplitudes: p[..n].to_vec(),
        amplitude_errors: (0..n).map(se).collect(),
        edge_centres,
        edge_centre_errors,
        durations,
        duration_errors,
        edge_time: w * tau,
        edge_time_error: se(2 * n + 1) * tau,
        residual_rms: rms,
        noise_estimate: sigma,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::waveform::{compile, DEFAULT_SAMPLE_RATE};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn noiseless_inverse() {
        let p = presets::high_fidelity_pulse();
        let s = compile(&p, DEFAULT_SAMPLE_RATE, None).unwrap();
        let fit = fit_envelope(&Trace::from_stream(&s), 5, &FitOptions::default()).unwrap();
        let truth = p.expanded_segments();
        for (f, t) in fit.segments().iter().zip(&truth) {
            assert!((f.amplitude - t.amplitude).abs() < 1e-6, "{f:?} vs {t:?}");
            assert!((f.duration - t.duration).abs() < 0.01e-9, "{f:?} vs {t:?}");
        }
        assert!((fit.edge_time - p.edge_time).abs() < 0.01e-9);
    }

    #[test]
    fn noisy_timing_error_is_small() {
        let p = presets::high_fidelity_pulse();
        let s = compile(&p, DEFAULT_SAMPLE_RATE, None).unwrap();
        let mut trace = Trace::from_stream(&s);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 0.01).unwrap();
        for v in trace.values.iter_mut() {
            *v += noise.sample(&mut rng);
        }
        let fit = fit_envelope(&trace, 5, &FitOptions::default()).unwrap();
        assert!(fit.duration_errors.iter().all(|e| *e < 0.2e-9), "{:?}", fit.duration_errors);
        assert!((fit.noise_estimate - 0.01).abs() < 0.002);
    }

    #[test]
    fn wrong_segment_count_is_mismatch() {
        let s = compile(&presets::high_fidelity_pulse(), DEFAULT_SAMPLE_RATE, None).unwrap();
        let trace = Trace::from_stream(&s);
        for n in [3, 7] {
            assert!(matches!(
                fit_envelope(&trace, n, &FitOptions::default()),
                Err(WaveformError::ModelMismatch(_))
            ));
        }
    }

    #[test]
    fn columns_parse() {
        let rows = parse_columns("# t a\n0, 1\n1e-9 2.5\n\n").unwrap();
        assert_eq!(rows, vec![(0.0, 1.0), (1e-9, 2.5)]);
        assert!(parse_columns("1 2 3").is_err());
    }
}
