mod common;

use std::io::Write;

use fastgate::waveform::{compensate, compile, fit_envelope, read_trace, FitOptions, Trace, TransferCurve, DEFAULT_SAMPLE_RATE};
use fastgate::{presets, Segment, WaveformError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[test]
fn compile_then_fit_recovers_both_reference_pulses() {
    for cfg in [presets::high_fidelity(), presets::fastest()] {
        let rt = common::compile_fit_round_trip(&cfg);
        assert!(rt.amplitude < 1e-6, "amplitude {:e}", rt.amplitude);
        assert!(rt.timing < 0.01e-9, "timing {:e}", rt.timing);
        assert!(rt.edge < 0.01e-9, "edge {:e}", rt.edge);
    }
}

#[test]
fn noisy_fast_gate_timing_is_resolved() {
    let p = presets::fastest_pulse();
    let s = compile(&p, DEFAULT_SAMPLE_RATE, None).unwrap();
    let mut trace = Trace::from_stream(&s);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let noise = Normal::new(0.0, 0.01).unwrap();
    for v in trace.values.iter_mut() {
        *v += noise.sample(&mut rng);
    }
    let fit = fit_envelope(&trace, 7, &FitOptions::default()).unwrap();
    assert!(fit.duration_errors.iter().all(|e| *e < 0.2e-9), "{:?}", fit.duration_errors);
    for (f, t) in fit.segments().iter().zip(p.expanded_segments()) {
        assert!((f.duration - t.duration).abs() < 1e-9, "{f:?} vs {t:?}");
    }
}

#[test]
fn sub_sample_boundary_shift_is_visible() {
    let p = presets::high_fidelity_pulse();
    let mut q = p.clone();
    q.segments[0].duration += 0.2e-9;
    q.segments[1].duration -= 0.2e-9;
    let a = compile(&p, DEFAULT_SAMPLE_RATE, None).unwrap();
    let b = compile(&q, DEFAULT_SAMPLE_RATE, None).unwrap();
    assert_eq!(a.len(), b.len());
    assert_ne!(a.samples, b.samples);
}

#[test]
fn zero_pulse_compiles_to_zeros() {
    let mut p = presets::high_fidelity_pulse();
    for s in p.segments.iter_mut() {
        *s = Segment::new(s.duration, 0.0);
    }
    let s = compile(&p, DEFAULT_SAMPLE_RATE, None).unwrap();
    assert!(s.samples.iter().all(|v| *v == 0.0));
}

#[test]
fn short_edges_are_rejected() {
    let p = presets::high_fidelity_pulse();
    assert!(matches!(compile(&p, 0.3e9, None), Err(WaveformError::EdgeTooShort { .. })));
}

#[test]
fn quadratic_transfer_curve_takes_square_roots() {
    let drive: Vec<f64> = (0..=200).map(|k| k as f64 / 200.0).collect();
    let optical: Vec<f64> = drive.iter().map(|x| x * x).collect();
    let curve = TransferCurve::new(drive, optical).unwrap();
    let s = compile(&presets::fastest_pulse(), DEFAULT_SAMPLE_RATE, None).unwrap();
    let c = compensate(&s, &curve).unwrap();
    for (req, drv) in s.samples.iter().zip(&c.samples) {
        assert!((drv - req.sqrt()).abs() < 2e-3, "{req} -> {drv}");
    }
}

#[test]
fn identity_curve_leaves_the_stream() {
    let s = compile(&presets::fastest_pulse(), DEFAULT_SAMPLE_RATE, None).unwrap();
    let c = compensate(&s, &TransferCurve::identity()).unwrap();
    for (a, b) in s.samples.iter().zip(&c.samples) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn saturating_curve_is_unreachable() {
    let curve = TransferCurve::new(vec![0.0, 0.5, 1.0], vec![0.0, 0.6, 0.8]).unwrap();
    let s = compile(&presets::fastest_pulse(), DEFAULT_SAMPLE_RATE, None).unwrap();
    assert!(matches!(compensate(&s, &curve), Err(WaveformError::UnreachableAmplitude { .. })));
}

#[test]
fn non_monotone_curve_is_rejected() {
    assert!(TransferCurve::new(vec![0.0, 0.5, 1.0], vec![0.0, 0.7, 0.6]).is_err());
}

#[test]
fn trace_files_are_read_as_two_columns() {
    let s = compile(&presets::high_fidelity_pulse(), DEFAULT_SAMPLE_RATE, None).unwrap();
    let trace = Trace::from_stream(&s);
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "# t amplitude").unwrap();
    for (t, v) in trace.times.iter().zip(&trace.values) {
        writeln!(f, "{t:?},{v:?}").unwrap();
    }
    let back = read_trace(f.path()).unwrap();
    assert_eq!(back, trace);
}
