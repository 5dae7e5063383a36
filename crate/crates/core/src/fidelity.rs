//! Branch overlaps and the Ramsey/spin-echo Bell-state fidelity.
//!
//! The gate acts on |s⟩|χ⟩ as |s⟩|χ_s⟩. After the first π/2 pulse the spin
//! amplitudes are `c_s`, so the reduced density matrix after the gate is
//! `ρ_{s s'} = c_s c̄_{s'} G_{s s'}` with `G_{s s'} = ⟨χ_{s'}|χ_s⟩`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

/// `G[s][s'] = ⟨χ_{s'}|χ_s⟩`, indexed by `Branch::index`.
pub type Overlaps = [[Complex64; 4]; 4];

pub fn zero_overlaps() -> Overlaps {
    [[Complex64::new(0.0, 0.0); 4]; 4]
}

/// Motional state of one mode before the gate, for closed-form overlaps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModeInit {
    Thermal { nbar: f64 },
    Coherent { alpha: Complex64 },
}

/// `⟨D(β)⟩` in the initial state: `e^{-|β|²(n̄+½)}` for thermal states,
/// `e^{-|β|²/2 + 2i Im(β ā₀)}` for coherent states.
pub fn displacement_expectation(beta: Complex64, init: ModeInit) -> Complex64 {
    match init {
        ModeInit::Thermal { nbar } => Complex64::new((-beta.norm_sqr() * (nbar + 0.5)).exp(), 0.0),
        ModeInit::Coherent { alpha } => {
            let arg = 2.0 * (beta * alpha.conj()).im;
            Complex64::from_polar((-0.5 * beta.norm_sqr()).exp(), arg)
        }
    }
}

/// `⟨χ_{s'}|χ_s⟩` for `χ_s = e^{iφ_s} D(α_s) χ₀` on each mode.
pub fn branch_overlap(
    phase_s: f64,
    alpha_s: &[Complex64; 2],
    phase_p: f64,
    alpha_p: &[Complex64; 2],
    init: &[ModeInit; 2],
) -> Complex64 {
    let mut ov = Complex64::from_polar(1.0, phase_s - phase_p);
    for m in 0..2 {
        let cross = (alpha_p[m] * alpha_s[m].conj()).im;
        ov *= Complex64::from_polar(1.0, -cross);
        ov *= displacement_expectation(alpha_s[m] - alpha_p[m], init[m]);
    }
    ov
}

type Mat2 = [[Complex64; 2]; 2];

fn rotation(theta: f64, phi: f64) -> Mat2 {
    let c = Complex64::new((0.5 * theta).cos(), 0.0);
    let s = (0.5 * theta).sin();
    // -i sin(θ/2)(cos φ σx + sin φ σy)
    let off_01 = Complex64::new(0.0, -s) * Complex64::from_polar(1.0, -phi);
    let off_10 = Complex64::new(0.0, -s) * Complex64::from_polar(1.0, phi);
    [[c, off_01], [off_10, c]]
}

fn mul2(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Spin amplitudes after the opening π/2 pulse on |↓↓⟩.
fn opening_amplitudes() -> [Complex64; 4] {
    let r = rotation(PI / 2.0, 0.0);
    let v = [r[0][0], r[1][0]];
    [v[0] * v[0], v[0] * v[1], v[1] * v[0], v[1] * v[1]]
}

/// Reduced two-qubit density matrix directly after the gate.
pub fn gate_density_matrix(g: &Overlaps) -> [[Complex64; 4]; 4] {
    let c = opening_amplitudes();
    let mut rho = zero_overlaps();
    for s in 0..4 {
        for p in 0..4 {
            rho[s][p] = c[s] * c[p].conj() * g[s][p];
        }
    }
    rho
}

/// Bell-state fidelity after the echo π pulse and the closing π/2(φ) pulse.
///
/// Partial-tomography form `(P_↓↓ + P_↑↑)/2 + |ρ_{↓↓,↑↑}|`, the maximum over
/// the relative phase of the target `(|↓↓⟩ + e^{iχ}|↑↑⟩)/√2`.
pub fn fidelity_at(rho: &[[Complex64; 4]; 4], phi_half: f64) -> f64 {
    let u1 = mul2(&rotation(PI / 2.0, phi_half), &rotation(PI, 0.0));
    let row = |r: usize| -> [Complex64; 4] {
        let (a, b) = (r >> 1, r & 1);
        [
            u1[a][0] * u1[b][0],
            u1[a][0] * u1[b][1],
            u1[a][1] * u1[b][0],
            u1[a][1] * u1[b][1],
        ]
    };
    let element = |x: &[Complex64; 4], y: &[Complex64; 4]| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for s in 0..4 {
            let mut inner = Complex64::new(0.0, 0.0);
            for p in 0..4 {
                inner += rho[s][p] * y[p].conj();
            }
            acc += x[s] * inner;
        }
        acc
    };
    let r0 = row(0);
    let r3 = row(3);
    let p00 = element(&r0, &r0).re;
    let p33 = element(&r3, &r3).re;
    let c03 = element(&r0, &r3).norm();
    (0.5 * (p00 + p33) + c03).clamp(0.0, 1.0)
}

/// Fidelity with the closing phase either fixed or optimized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RamseyOutcome {
    pub fidelity: f64,
    pub phi_half: f64,
}

/// Maximize `fidelity_at` over φ: coarse scan, then golden-section refinement.
pub fn optimize_phi_half(rho: &[[Complex64; 4]; 4]) -> RamseyOutcome {
    const SCAN: usize = 48;
    let f = |phi: f64| fidelity_at(rho, phi);
    let step = TAU / SCAN as f64;
    let mut best = (0.0, f64::NEG_INFINITY);
    for k in 0..SCAN {
        let phi = k as f64 * step;
        let v = f(phi);
        if v > best.1 {
            best = (phi, v);
        }
    }
    let (mut a, mut b) = (best.0 - step, best.0 + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > 1e-9 {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    let phi = 0.5 * (a + b);
    let v = f(phi);
    let (phi, v) = if v >= best.1 { (phi, v) } else { best };
    RamseyOutcome {
        fidelity: v,
        phi_half: phi.rem_euclid(TAU),
    }
}

/// Ramsey analysis of a φ₀-averaged overlap matrix.
pub fn analyze(g: &Overlaps, phi_half: Option<f64>) -> RamseyOutcome {
    let rho = gate_density_matrix(g);
    match phi_half {
        Some(phi) => RamseyOutcome {
            fidelity: fidelity_at(&rho, phi),
            phi_half: phi,
        },
        None => optimize_phi_half(&rho),
    }
}

/// Mean of overlap matrices, summed in index order.
pub fn mean_overlaps<'a>(items: impl IntoIterator<Item = &'a Overlaps>) -> Overlaps {
    let mut acc = zero_overlaps();
    let mut n = 0usize;
    for g in items {
        for s in 0..4 {
            for p in 0..4 {
                acc[s][p] += g[s][p];
            }
        }
        n += 1;
    }
    if n > 0 {
        let inv = 1.0 / n as f64;
        for row in acc.iter_mut() {
            for v in row.iter_mut() {
                *v *= inv;
            }
        }
    }
    acc
}

/// Differential phase `(φ_↓↑ + φ_↑↓ − φ_↓↓ − φ_↑↑)/2` read from an overlap matrix.
pub fn overlap_entangling_phase(g: &Overlaps) -> f64 {
    0.5 * ((g[1][0]).arg() + (g[2][3]).arg())
}

/// Ideal gate overlaps for branch phases `phases`.
pub fn ideal_overlaps(phases: [f64; 4]) -> Overlaps {
    let mut g = zero_overlaps();
    for s in 0..4 {
        for p in 0..4 {
            g[s][p] = Complex64::from_polar(1.0, phases[s] - phases[p]);
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_gate_reaches_unit_fidelity() {
        for chi in [PI / 2.0, -PI / 2.0] {
            let g = ideal_overlaps([0.3, 0.3 + chi, 0.3 + chi, 0.3]);
            let out = analyze(&g, None);
            assert!((out.fidelity - 1.0).abs() < 1e-12, "{out:?}");
        }
    }

    #[test]
    fn identity_gate_gives_one_half() {
        let g = ideal_overlaps([0.0; 4]);
        let out = analyze(&g, None);
        assert!((out.fidelity - 0.5).abs() < 1e-12, "{out:?}");
    }

    #[test]
    fn single_qubit_phases_are_absorbed() {
        // The same z rotation on both ions shifts ↓↓ and ↑↑ oppositely.
        let (a, chi) = (0.7, PI / 2.0);
        let g = ideal_overlaps([-a, chi, chi, a]);
        let out = analyze(&g, None);
        assert!((out.fidelity - 1.0).abs() < 1e-10, "{out:?}");
    }

    #[test]
    fn fully_dephased_motion_leaves_populations() {
        let mut g = zero_overlaps();
        for s in 0..4 {
            g[s][s] = Complex64::new(1.0, 0.0);
        }
        let out = analyze(&g, None);
        assert!((out.fidelity - 0.25).abs() < 1e-12, "{out:?}");
    }

    #[test]
    fn overlap_of_equal_displacements_is_phase_only() {
        let a = [Complex64::new(0.3, -0.2), Complex64::new(-0.1, 0.5)];
        let init = [ModeInit::Thermal { nbar: 0.0 }; 2];
        let ov = branch_overlap(1.0, &a, 0.25, &a, &init);
        assert!((ov - Complex64::from_polar(1.0, 0.75)).norm() < 1e-15);
    }

    #[test]
    fn thermal_overlap_decays_faster() {
        let b = Complex64::new(0.2, 0.1);
        let g0 = displacement_expectation(b, ModeInit::Thermal { nbar: 0.0 });
        let g1 = displacement_expectation(b, ModeInit::Thermal { nbar: 0.5 });
        let c0 = displacement_expectation(b, ModeInit::Coherent { alpha: Complex64::new(0.0, 0.0) });
        assert!((g0 - c0).norm() < 1e-15);
        assert!(g1.re < g0.re);
    }
}
