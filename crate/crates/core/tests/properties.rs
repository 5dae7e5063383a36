mod common;

use std::f64::consts::FRAC_PI_2;

use fastgate::budget::{assemble_budget, heating_component, scattering_component, BudgetSettings, SolutionErrors};
use fastgate::ld::LdSolver;
use fastgate::model::{Envelope, SimOptions};
use fastgate::optimize::nelder_mead::{minimize, NelderMeadOptions};
use fastgate::optimize::ld_score;
use fastgate::waveform::{compensate, compile, SampleStream, TransferCurve};
use fastgate::{presets, PulseShape, Segment, SpinCoupling, ValidatedConfig};
use proptest::prelude::*;

fn segments_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((10e-9..400e-9f64, 0.05..1.0f64), 1..5)
}

fn pulse_from(half: &[(f64, f64)], nu: f64) -> PulseShape {
    let max = half.iter().map(|s| s.1).fold(0.0, f64::max);
    PulseShape {
        segments: half.iter().map(|&(d, a)| Segment::new(d, a / max)).collect(),
        symmetric: true,
        edge_time: 5e-9,
        omega_peak: 5e7,
        nu,
        phi_half: None,
    }
}

fn config_from(half: &[(f64, f64)], nu: f64) -> ValidatedConfig {
    let options = SimOptions {
        phi0_grid_size: 8,
        ..SimOptions::default()
    };
    ValidatedConfig::new(presets::high_fidelity_trap(), pulse_from(half, nu), SpinCoupling::default(), options)
        .expect("valid pulse")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn envelope_area_is_duration_weighted_amplitude(half in segments_strategy()) {
        let p = pulse_from(&half, 2.6e6);
        let segs = p.expanded_segments();
        let env = Envelope::from_segments(&segs, p.edge_time);
        let expected: f64 = segs.iter().map(|s| s.duration * s.amplitude).sum();
        prop_assert!((env.area() - expected).abs() <= 1e-12 * expected);
        prop_assert!((env.gate_time() - p.gate_time()).abs() < 1e-18);
        prop_assert_eq!(env.value(0.0), 0.0);
        prop_assert!(env.value(env.gate_time()).abs() < 1e-12);
        for k in 0..=200 {
            let v = env.value(env.gate_time() * k as f64 / 200.0);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
        }
    }

    #[test]
    fn entangling_phase_scales_with_omega_squared(half in segments_strategy(), nu in 2.0e6..6.0e6f64, s in 0.1..10.0f64) {
        let cfg = config_from(&half, nu);
        let solver = LdSolver::new(&cfg);
        let p1 = solver.mean_entangling_phase(cfg.pulse.omega_peak);
        let p2 = solver.mean_entangling_phase(s * cfg.pulse.omega_peak);
        prop_assert!((p2 - s * s * p1).abs() <= 1e-9 * p2.abs().max(1e-12));
    }

    #[test]
    fn calibrated_score_hits_quarter_turn(half in segments_strategy(), nu in 2.0e6..6.0e6f64) {
        let cfg = config_from(&half, nu);
        if let Ok(score) = ld_score(&cfg) {
            let phase = LdSolver::new(&score.config).mean_entangling_phase(score.pulse.omega_peak);
            prop_assert!((phase.abs() - FRAC_PI_2).abs() < 1e-6);
        }
    }

    #[test]
    fn scattering_is_monotone(area in 1.0..500.0f64, da in 0.01..50.0f64, det in 1e10..5e12f64, dd in 1e9..1e12f64) {
        let c = 1e8;
        let base = scattering_component(area, det, c).unwrap();
        prop_assert!(scattering_component(area + da, det, c).unwrap() > base);
        prop_assert!(scattering_component(area, det + dd, c).unwrap() < base);
        prop_assert!(scattering_component(area, -det, c).unwrap() == base);
    }

    #[test]
    fn heating_is_bilinear(tg in 1e-7..1e-4f64, ndot in 0.0..1e3f64, k in 0.1..10.0f64) {
        let h = heating_component(tg, ndot).unwrap();
        prop_assert!((heating_component(k * tg, ndot).unwrap() - k * h).abs() <= 1e-12 * (k * h).max(1e-300));
        prop_assert!((heating_component(tg, k * ndot).unwrap() - k * h).abs() <= 1e-12 * (k * h).max(1e-300));
    }

    #[test]
    fn budget_total_is_the_sum(full in 0.0..0.5f64, ld in 0.0..0.1f64, sens in 0.0..0.01f64, det in 1e10..1e12f64, ndot in 0.0..100.0f64) {
        let cfg = presets::high_fidelity();
        let sol = SolutionErrors { full_error: full, ld_error: ld, sensitivity: sens };
        let settings = BudgetSettings { detuning_hz: det, ndot, c_sc: None };
        let b = assemble_budget(&cfg, &sol, &settings).unwrap();
        let mut sum = 0.0;
        for name in ["out_of_ld", "scattering", "heating", "timing_amplitude"] {
            sum += b.get(name).and_then(|c| c.value()).unwrap();
        }
        prop_assert!((b.total - sum).abs() <= 1e-15);
        prop_assert!(b.get("chirp_note").unwrap().value().is_none());
    }

    #[test]
    fn simplex_stays_in_the_unit_cube(x0 in prop::collection::vec(-0.5..1.5f64, 1..6), c in prop::collection::vec(-2.0..3.0f64, 6)) {
        let n = x0.len();
        let mut outside = false;
        let r = minimize(
            |x| {
                outside |= x.iter().any(|v| !(0.0..=1.0).contains(v));
                x.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum()
            },
            &x0,
            &NelderMeadOptions { max_evaluations: 400, ..NelderMeadOptions::default() },
        );
        prop_assert!(!outside);
        prop_assert!(r.x.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert_eq!(r.x.len(), n);
        prop_assert!(r.evaluations <= 400 + 2 * (n + 1));
    }

    #[test]
    fn stream_formats_round_trip(half in segments_strategy(), bits in prop::option::of(8u32..16)) {
        let p = pulse_from(&half, 2.6e6);
        let s = compile(&p, 1.25e9, bits).unwrap();
        let mut text = Vec::new();
        s.write_text(&mut text).unwrap();
        prop_assert_eq!(&SampleStream::read_text(&text[..]).unwrap(), &s);
        let mut bin = Vec::new();
        s.write_binary(&mut bin).unwrap();
        prop_assert_eq!(&SampleStream::read_binary(&bin[..]).unwrap(), &s);
        prop_assert!(s.samples.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn stream_area_matches_envelope(half in segments_strategy()) {
        let p = pulse_from(&half, 2.6e6);
        let s = compile(&p, 1.25e9, None).unwrap();
        let area = Envelope::from_segments(&p.expanded_segments(), p.edge_time).area();
        prop_assert!((s.area() - area).abs() <= 1e-3 * area);
    }

    #[test]
    fn compensation_round_trips(half in segments_strategy(), gamma in 0.5..2.5f64) {
        let drive: Vec<f64> = (0..=40).map(|k| k as f64 / 40.0).collect();
        let optical: Vec<f64> = drive.iter().map(|x| x.powf(gamma)).collect();
        let curve = TransferCurve::new(drive, optical).unwrap();
        let s = compile(&pulse_from(&half, 2.6e6), 1.25e9, None).unwrap();
        let c = compensate(&s, &curve).unwrap();
        for (req, drv) in s.samples.iter().zip(&c.samples) {
            prop_assert!((curve.apply(*drv) - req).abs() <= 2e-3 * req.max(1e-3));
        }
    }
}

#[test]
fn closed_form_matches_rk4_for_the_reference_gates() {
    for cfg in [presets::high_fidelity(), presets::fastest()] {
        let worst = common::ld_vs_rk4(&cfg);
        assert!(worst < 1e-8, "worst deviation {worst:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn closed_form_matches_rk4(half in segments_strategy(), nu in 2.0e6..6.0e6f64) {
        let cfg = config_from(&half, nu);
        let Ok(score) = ld_score(&cfg) else { return Ok(()); };
        let worst = common::ld_vs_rk4(&score.config);
        prop_assert!(worst < 1e-8, "worst deviation {:e}", worst);
    }
}
