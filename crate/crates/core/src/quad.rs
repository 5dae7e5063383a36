//! Gauss-Legendre quadrature and closed-form oscillatory moments.

use std::sync::OnceLock;

use num_complex::Complex64;

/// Nodes on [-1, 1] and weights of the 16-point Gauss-Legendre rule.
pub fn gauss_legendre_16() -> &'static ([f64; 16], [f64; 16]) {
    static RULE: OnceLock<([f64; 16], [f64; 16])> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre::<16>())
}

fn gauss_legendre<const N: usize>() -> ([f64; N], [f64; N]) {
    let mut x = [0.0; N];
    let mut w = [0.0; N];
    let n = N as f64;
    for i in 0..N.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Three-term recurrence for P_N and its derivative.
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=N {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[N - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[N - 1 - i] = wi;
    }
    (x, w)
}

/// `(∫₀ᴸ e^{iks} ds, ∫₀ᴸ s e^{iks} ds)`, accurate for all `kL` including 0.
pub fn oscillatory_moments(k: f64, len: f64) -> (Complex64, Complex64) {
    let z = k * len;
    if z.abs() < 1.0 {
        // Taylor series in iz; 24 terms reach machine precision for |z| < 1.
        let iz = Complex64::new(0.0, z);
        let mut term = Complex64::new(1.0, 0.0);
        let mut m0 = Complex64::new(0.0, 0.0);
        let mut m1 = Complex64::new(0.0, 0.0);
        for n in 0..24 {
            let nf = n as f64;
            m0 += term / (nf + 1.0);
            m1 += term / (nf + 2.0);
            term = term * iz / (nf + 1.0);
        }
        (m0 * len, m1 * len * len)
    } else {
        let e = Complex64::from_polar(1.0, z);
        let ik = Complex64::new(0.0, k);
        let m0 = (e - 1.0) / ik;
        let m1 = (e * len - m0) / ik;
        (m0, m1)
    }
}
