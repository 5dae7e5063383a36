use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Uniform 2D grid in `(q_c, q_s)`, `q = (a + a†)/√2`.
///
/// Axis `m` holds `N_m` points `q = −X_m + i·dq_m`; momenta follow FFT order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionalGrid {
    pub points: [usize; 2],
    /// Half-extent `X_m` of each axis (units of q).
    pub extent: [f64; 2],
}

impl MotionalGrid {
    pub fn new(points: [usize; 2], extent: [f64; 2]) -> Result<Self, ConfigError> {
        for m in 0..2 {
            if !points[m].is_power_of_two() || points[m] < 8 {
                return Err(ConfigError::invalid(
                    format!("sim.grid_points[{m}]"),
                    format!("must be a power of two >= 8, got {}", points[m]),
                ));
            }
            if !(extent[m].is_finite() && extent[m] > 0.0) {
                return Err(ConfigError::invalid(
                    format!("sim.grid_extent[{m}]"),
                    format!("must be positive, got {}", extent[m]),
                ));
            }
        }
        Ok(MotionalGrid { points, extent })
    }

    /// Grid covering a packet displaced by up to `max_alpha[m]` on each axis.
    ///
    /// `X = √2·1.1·max|α| + 6.5`, and `N` is the next power of two with
    /// `π/dq ≥ X`, so position and momentum windows are equally wide.
    pub fn sized_for(max_alpha: [f64; 2]) -> Self {
        Self::with_extent(max_alpha.map(|a| std::f64::consts::SQRT_2 * 1.1 * a + 6.5))
    }

    /// Grid on `[-x, x)` per axis whose momentum range matches its extent.
    pub fn with_extent(extent: [f64; 2]) -> Self {
        let points = extent.map(|x| ((2.0 * x * x / PI).ceil() as usize).next_power_of_two().max(32));
        MotionalGrid { points, extent }
    }

    pub fn len(&self) -> usize {
        self.points[0] * self.points[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * self.extent[axis] / self.points[axis] as f64
    }

    pub fn positions(&self, axis: usize) -> Vec<f64> {
        let dq = self.spacing(axis);
        (0..self.points[axis])
            .map(|i| -self.extent[axis] + i as f64 * dq)
            .collect()
    }

    /// Conjugate momenta in FFT order.
    pub fn momenta(&self, axis: usize) -> Vec<f64> {
        let n = self.points[axis];
        let dp = TAU / (n as f64 * self.spacing(axis));
        (0..n)
            .map(|k| {
                let kk = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
                kk * dp
            })
            .collect()
    }
}

/// Row-major `[c][s]` complex field transformed with unitary 2D FFTs.
///
/// The forward transform leaves data in transposed `[s][c]` order; the
/// inverse restores `[c][s]`.
pub struct Fft2 {
    nc: usize,
    ns: usize,
    fwd_c: Arc<dyn Fft<f64>>,
    fwd_s: Arc<dyn Fft<f64>>,
    inv_c: Arc<dyn Fft<f64>>,
    inv_s: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Fft2 {
    pub fn new(grid: &MotionalGrid) -> Self {
        let [nc, ns] = grid.points;
        let mut planner = FftPlanner::new();
        let fwd_c = planner.plan_fft_forward(nc);
        let fwd_s = planner.plan_fft_forward(ns);
        let inv_c = planner.plan_fft_inverse(nc);
        let inv_s = planner.plan_fft_inverse(ns);
        let scratch_len = [&fwd_c, &fwd_s, &inv_c, &inv_s]
            .iter()
            .map(|f| f.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        Fft2 {
            nc,
            ns,
            fwd_c,
            fwd_s,
            inv_c,
            inv_s,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            tmp: vec![Complex64::new(0.0, 0.0); nc * ns],
        }
    }

    fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
        const B: usize = 16;
        for r0 in (0..rows).step_by(B) {
            for c0 in (0..cols).step_by(B) {
                for r in r0..(r0 + B).min(rows) {
                    for c in c0..(c0 + B).min(cols) {
                        dst[c * rows + r] = src[r * cols + c];
                    }
                }
            }
        }
    }

    /// Unnormalized forward transform; output in `[s][c]` order.
    pub fn forward(&mut self, data: &mut [Complex64]) {
        self.fwd_s.process_with_scratch(data, &mut self.scratch);
        Self::transpose(data, &mut self.tmp, self.nc, self.ns);
        self.fwd_c.process_with_scratch(&mut self.tmp, &mut self.scratch);
        data.copy_from_slice(&self.tmp);
    }

    /// Unnormalized inverse transform of `[s][c]` data back to `[c][s]`.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        self.inv_c.process_with_scratch(data, &mut self.scratch);
        Self::transpose(data, &mut self.tmp, self.ns, self.nc);
        self.inv_s.process_with_scratch(&mut self.tmp, &mut self.scratch);
        data.copy_from_slice(&self.tmp);
    }

    /// `1/(N_c N_s)`: the round-trip normalization.
    pub fn round_trip_scale(&self) -> f64 {
        1.0 / (self.nc * self.ns) as f64
    }

    /// Unitary forward transform (`1/√N` scaling).
    pub fn forward_unitary(&mut self, data: &mut [Complex64]) {
        self.forward(data);
        let s = self.round_trip_scale().sqrt();
        data.iter_mut().for_each(|v| *v *= s);
    }

    /// Unitary inverse transform.
    pub fn inverse_unitary(&mut self, data: &mut [Complex64]) {
        self.inverse(data);
        let s = self.round_trip_scale().sqrt();
        data.iter_mut().for_each(|v| *v *= s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unitary_round_trip() {
        let grid = MotionalGrid::new([16, 32], [5.0, 6.0]).unwrap();
        let mut fft = Fft2::new(&grid);
        let orig: Vec<Complex64> = (0..grid.len())
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let n0: f64 = orig.iter().map(|v| v.norm_sqr()).sum();
        let mut data = orig.clone();
        fft.forward_unitary(&mut data);
        let n1: f64 = data.iter().map(|v| v.norm_sqr()).sum();
        assert!((n0 - n1).abs() < 1e-12 * n0);
        fft.inverse_unitary(&mut data);
        for (a, b) in orig.iter().zip(&data) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn momenta_are_conjugate() {
        let grid = MotionalGrid::new([64, 64], [8.0, 8.0]).unwrap();
        let p = grid.momenta(0);
        let dq = grid.spacing(0);
        assert!((p[1] * dq * 64.0 - TAU).abs() < 1e-12);
        assert!(p[32] < 0.0);
    }

    #[test]
    fn sizing_grows_with_displacement() {
        let small = MotionalGrid::sized_for([0.5, 0.5]);
        let big = MotionalGrid::sized_for([6.0, 2.0]);
        assert!(big.points[0] >= small.points[0]);
        assert!(big.extent[0] > small.extent[0]);
        assert!(big.points.iter().all(|n| n.is_power_of_two()));
    }
}
