use serde::{Deserialize, Serialize};

use super::stream::SampleStream;
use crate::error::WaveformError;

/// Tabulated AOM response, drive amplitude → optical amplitude, both on `[0, 1]`.
///
/// Interpolated with a monotone piecewise-cubic Hermite (PCHIP) spline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCurve", into = "RawCurve")]
pub struct TransferCurve {
    drive: Vec<f64>,
    optical: Vec<f64>,
    slopes: Vec<f64>,
}

#[derive(Clone, Serialize, Deserialize)]
struct RawCurve {
    drive: Vec<f64>,
    optical: Vec<f64>,
}

impl TryFrom<RawCurve> for TransferCurve {
    type Error = WaveformError;
    fn try_from(raw: RawCurve) -> Result<Self, Self::Error> {
        TransferCurve::new(raw.drive, raw.optical)
    }
}

impl From<TransferCurve> for RawCurve {
    fn from(c: TransferCurve) -> Self {
        RawCurve {
            drive: c.drive,
            optical: c.optical,
        }
    }
}

impl TransferCurve {
    pub fn new(drive: Vec<f64>, optical: Vec<f64>) -> Result<Self, WaveformError> {
        let bad = |m: String| Err(WaveformError::BadCurve(m));
        if drive.len() != optical.len() || drive.len() < 2 {
            return bad(format!(
                "need at least two (drive, optical) pairs of equal length, got {} and {}",
                drive.len(),
                optical.len()
            ));
        }
        for (name, v) in [("drive", &drive), ("optical", &optical)] {
            if let Some(x) = v.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                return bad(format!("{name} value {x} outside [0, 1]"));
            }
        }
        for i in 1..drive.len() {
            if drive[i] <= drive[i - 1] {
                return bad(format!("drive not strictly increasing at index {i}"));
            }
            if optical[i] <= optical[i - 1] {
                return bad(format!("curve is not monotone: optical[{i}] = {} <= {}", optical[i], optical[i - 1]));
            }
        }
        let slopes = pchip_slopes(&drive, &optical);
        Ok(TransferCurve {
            drive,
            optical,
            slopes,
        })
    }

    pub fn identity() -> Self {
        TransferCurve::new(vec![0.0, 1.0], vec![0.0, 1.0]).expect("identity is monotone")
    }

    /// Parse two-column text (`drive optical`, `#` comments, commas or spaces).
    pub fn parse(text: &str) -> Result<Self, WaveformError> {
        let rows = super::fit::parse_columns(text)?;
        TransferCurve::new(rows.iter().map(|r| r.0).collect(), rows.iter().map(|r| r.1).collect())
    }

    pub fn optical_range(&self) -> (f64, f64) {
        (self.optical[0], *self.optical.last().expect("non-empty"))
    }

    /// Optical amplitude for a drive amplitude within the tabulated range.
    pub fn apply(&self, x: f64) -> f64 {
        let (x0, xn) = (self.drive[0], *self.drive.last().expect("non-empty"));
        let x = x.clamp(x0, xn);
        let i = self.drive.partition_point(|&d| d <= x).clamp(1, self.drive.len() - 1) - 1;
        let h = self.drive[i + 1] - self.drive[i];
        let s = (x - self.drive[i]) / h;
        let (y0, y1) = (self.optical[i], self.optical[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * m1
    }

    /// Drive amplitude producing optical amplitude `y`.
    pub fn invert(&self, y: f64) -> Result<f64, WaveformError> {
        let (lo, hi) = self.optical_range();
        // Zero drive stays zero when the curve starts at the origin.
        if y == lo {
            return Ok(self.drive[0]);
        }
        if !(y >= lo && y <= hi) {
            return Err(WaveformError::UnreachableAmplitude {
                requested: y,
                min: lo,
                max: hi,
            });
        }
        let i = self.optical.partition_point(|&o| o <= y).clamp(1, self.optical.len() - 1) - 1;
        let (mut a, mut b) = (self.drive[i], self.drive[i + 1]);
        // The PCHIP segment is monotone, so bisection converges to the unique root.
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if self.apply(m) < y {
                a = m;
            } else {
                b = m;
            }
        }
        Ok(0.5 * (a + b))
    }
}

/// Fritsch-Carlson derivative estimates; monotone data give a monotone spline.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = (0..n - 1).map(|i| x[i + 1] - x[i]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut m = vec![0.0; n];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    m[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    m[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    m
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

/// Drive stream whose optical response through `curve` reproduces `stream`.
pub fn compensate(stream: &SampleStream, curve: &TransferCurve) -> Result<SampleStream, WaveformError> {
    let samples = stream
        .samples
        .iter()
        .map(|&y| curve.invert(y))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SampleStream {
        samples,
        ..stream.clone()
    })
}
