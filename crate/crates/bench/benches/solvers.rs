use criterion::{black_box, criterion_group, criterion_main, Criterion};
use fastgate::full::{self, BranchWave};
use fastgate::optimize::{ld_score, sensitivity, Jitter};
use fastgate::waveform::{compile, fit_envelope, FitOptions, Trace, DEFAULT_SAMPLE_RATE};
use fastgate::{ld_gate_error, presets, Branch};

fn lamb_dicke(c: &mut Criterion) {
    let hf = presets::high_fidelity();
    c.bench_function("ld_gate_error/1.59us", |b| b.iter(|| ld_gate_error(black_box(&hf))));
    c.bench_function("ld_score/1.59us", |b| b.iter(|| ld_score(black_box(&hf)).unwrap()));
    let j = Jitter {
        draws: 10,
        ..Jitter::default()
    };
    c.bench_function("sensitivity/10 draws", |b| b.iter(|| sensitivity(black_box(&hf), &j).unwrap()));
}

fn split_operator(c: &mut Criterion) {
    let hf = presets::high_fidelity();
    let grid = full::grid_for(&hf).unwrap();
    let mut g = c.benchmark_group("full");
    g.sample_size(10);
    g.bench_function("propagate_full/1.59us one branch", |b| {
        b.iter(|| {
            let start = BranchWave::ground(&grid, Branch::DownUp, 0.0);
            full::propagate_full(&hf, Branch::DownUp, 0.0, start).unwrap()
        })
    });
    g.finish();
}

fn waveform(c: &mut Criterion) {
    let pulse = presets::high_fidelity_pulse();
    c.bench_function("compile/1.59us", |b| {
        b.iter(|| compile(black_box(&pulse), DEFAULT_SAMPLE_RATE, None).unwrap())
    });
    let trace = Trace::from_stream(&compile(&pulse, DEFAULT_SAMPLE_RATE, None).unwrap());
    let mut g = c.benchmark_group("fit");
    g.sample_size(10);
    g.bench_function("fit_envelope/5 segments", |b| {
        b.iter(|| fit_envelope(black_box(&trace), 5, &FitOptions::default()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, lamb_dicke, split_operator, waveform);
criterion_main!(benches);
