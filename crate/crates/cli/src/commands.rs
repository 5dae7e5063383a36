use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use fastgate::budget::{assemble_budget, render_text, BudgetSettings, ErrorBudget, SolutionErrors};
use fastgate::config::{config_hash, GateConfig};
use fastgate::full::curve::{CurveOptions, CurveSolver};
use fastgate::full::snapshot::write_snapshot;
use fastgate::full::{self, BranchWave, Propagator};
use fastgate::optimize::{run_search, sensitivity, Jitter, SearchSpace, SolutionSet};
use fastgate::sweep::{run_sweep, write_csv, SweepParam, SweepSpec};
use fastgate::waveform::{compensate, compile, fit_envelope, read_trace, FitOptions, SampleStream, TransferCurve, STREAM_MAGIC};
use fastgate::{ld_gate_error, propagate_ld, Branch, ValidatedConfig};

use crate::error::{io_at, CliError};
use crate::{Cli, Command, Solver, StreamFormat, SCHEMA_VERSION};

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate {
            config,
            solver,
            out,
            snapshot_every,
        } => simulate(cli, config, *solver, out.as_deref(), *snapshot_every),
        Command::Optimize { space, seeds, rng, out } => optimize(cli, space, *seeds, *rng, out.as_deref()),
        Command::Sweep {
            config,
            param,
            values,
            solver,
            out,
        } => sweep(cli, config, param, values, *solver, out.as_deref()),
        Command::Budget {
            configs,
            draws,
            no_recalibrate,
        } => budget(cli, configs, *draws, !*no_recalibrate),
        Command::Compile {
            input,
            index,
            rate,
            bits,
            format,
            curve,
            out,
        } => compile_cmd(cli, input, *index, *rate, *bits, *format, curve.as_deref(), out),
        Command::Fit { trace, segments, out } => fit(cli, trace, *segments, out.as_deref()),
        Command::Compensate { stream, curve, out } => compensate_cmd(cli, stream, curve, out),
    }
}

fn emit(cli: &Cli, command: &str, body: Value, text: impl FnOnce() -> String) {
    if cli.json {
        let mut doc = json!({ "schema_version": SCHEMA_VERSION, "command": command });
        if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
            d.extend(b);
        }
        println!("{}", serde_json::to_string_pretty(&doc).expect("JSON document"));
    } else {
        print!("{}", text());
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable result")
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<(), CliError> {
    let f = File::create(path).map_err(io_at(path))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, v).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    writeln!(w).map_err(io_at(path))?;
    Ok(())
}

/// Refuse to overwrite any input file.
fn check_distinct(out: &Path, inputs: &[&Path]) -> Result<(), CliError> {
    let canon = |p: &Path| std::fs::canonicalize(p).ok();
    if let Some(o) = canon(out) {
        if inputs.iter().any(|i| canon(i).as_ref() == Some(&o)) {
            return Err(CliError::Input(format!("{}: output would overwrite an input file", out.display())));
        }
    }
    Ok(())
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}{suffix}"))
}

fn load_config(path: &Path) -> Result<(GateConfig, ValidatedConfig), CliError> {
    let g = GateConfig::load(path)?;
    let v = g.prepared()?;
    Ok((g, v))
}

fn simulate(
    cli: &Cli,
    path: &Path,
    solver: Solver,
    out: Option<&Path>,
    snapshot_every: Option<usize>,
) -> Result<(), CliError> {
    let (_, cfg) = load_config(path)?;
    if let Some(o) = out {
        check_distinct(o, &[path])?;
    }
    let ld = ld_gate_error(&cfg);
    let (name, bell_error, phi_half, phase, detail) = match solver {
        Solver::Ld => ("ld", ld.bell_error, ld.phi_half, ld.entangling_phase, to_value(&ld)),
        Solver::Full => {
            let r = full::full_gate_error(&cfg)?;
            ("full", r.bell_error, r.phi_half, r.entangling_phase, to_value(&r))
        }
    };
    let doc = json!({
        "solver": name,
        "config_hash": config_hash(&cfg),
        "gate_time": cfg.gate_time(),
        "omega_peak": cfg.pulse.omega_peak,
        "nu": cfg.pulse.nu,
        "pulse_area": cfg.pulse_area(),
        "bell_error": bell_error,
        "ld_error": ld.bell_error,
        "phi_half": phi_half,
        "entangling_phase": phase,
        "result": detail,
    });
    if let Some(o) = out {
        write_json(o, &json!({ "schema_version": SCHEMA_VERSION, "gate_result": &doc }))?;
        write_trajectories(&cfg, &sibling(o, ".trajectory.csv"))?;
        if let (Solver::Full, Some(every)) = (solver, snapshot_every) {
            write_snapshots(&cfg, every.max(1), &sibling(o, ".snapshots"))?;
        }
    }
    emit(cli, "simulate", doc.clone(), || {
        format!(
            "solver {name}\ngate time      {:.4e} s\nomega_peak     {:.6e} rad/s\nnu             {:.6e} Hz\nbell error     {:.4e}\nLD error       {:.4e}\nphase          {:.9} rad\nphi_half       {:.6} rad\n",
            cfg.gate_time(),
            cfg.pulse.omega_peak,
            cfg.pulse.nu,
            bell_error,
            ld.bell_error,
            phase,
            phi_half
        )
    });
    Ok(())
}

/// LD trajectories of every branch at φ₀ = 0 and π/2.
fn write_trajectories(cfg: &ValidatedConfig, path: &Path) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path).map_err(io_at(path))?);
    let mut text = String::from("phi0,branch,t,re_alpha_c,im_alpha_c,re_alpha_s,im_alpha_s\n");
    for phi0 in [0.0, std::f64::consts::FRAC_PI_2] {
        for branch in Branch::ALL {
            let tr = propagate_ld(cfg, branch, phi0);
            for (t, a) in tr.times.iter().zip(&tr.alpha) {
                let _ = writeln!(
                    text,
                    "{phi0},{},{t},{},{},{},{}",
                    branch.label(),
                    a[0].re,
                    a[0].im,
                    a[1].re,
                    a[1].im
                );
            }
        }
    }
    w.write_all(text.as_bytes()).map_err(io_at(path))?;
    Ok(())
}

fn write_snapshots(cfg: &ValidatedConfig, every: usize, dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(io_at(dir))?;
    let grid = full::grid_for(cfg)?;
    let phi0 = cfg.options.phi0_grid()[0];
    let mut wave = BranchWave::ground(&grid, Branch::DownUp, phi0);
    let mut prop = Propagator::new(cfg, &grid)?;
    let mut snaps = Vec::new();
    prop.run(&mut wave, every, &mut snaps)?;
    for (i, s) in snaps.iter().enumerate() {
        let path = dir.join(format!("snap_{i:05}.bin"));
        let f = File::create(&path).map_err(io_at(&path))?;
        write_snapshot(BufWriter::new(f), &grid, s).map_err(io_at(&path))?;
    }
    Ok(())
}

fn optimize(cli: &Cli, path: &Path, seeds: usize, rng: u64, out: Option<&Path>) -> Result<(), CliError> {
    let space = SearchSpace::load(path)?;
    if let Some(o) = out {
        check_distinct(o, &[path])?;
    }
    let set = run_search(&space, seeds, rng)?;
    if set.screened == 0 {
        return Err(CliError::NoCandidate(format!(
            "no candidate out of {seeds} passed the screen ld_error < {:e}",
            space.epsilon_t
        )));
    }
    if let Some(o) = out {
        write_json(o, &set)?;
    }
    emit(cli, "optimize", to_value(&set), || solution_table(&set));
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3e}")).unwrap_or_else(|| "-".into())
}

fn solution_table(set: &SolutionSet) -> String {
    let mut s = format!(
        "{} seeds, {} screened, {} on the Pareto front\n{:>10} {:>10} {:>10} {:>9} {:>11} {:>10}\n",
        set.seeds,
        set.screened,
        set.solutions.len(),
        "t_g(ns)",
        "ld_error",
        "full_error",
        "area",
        "sensitivity",
        "nu/MHz"
    );
    for c in &set.solutions {
        let _ = writeln!(
            s,
            "{:>10.1} {:>10.3e} {:>10} {:>9.3} {:>11} {:>10.5}",
            c.gate_time() * 1e9,
            c.ld_error,
            fmt_opt(c.full_error),
            c.pulse_area,
            fmt_opt(c.sensitivity),
            c.pulse.nu * 1e-6
        );
    }
    s
}

fn parse_values(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |m: String| CliError::Input(format!("--values: {m}"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let start: f64 = parts[0].trim().parse().map_err(|e| bad(format!("{e}")))?;
        let stop: f64 = parts[1].trim().parse().map_err(|e| bad(format!("{e}")))?;
        let count: usize = parts[2].trim().parse().map_err(|e| bad(format!("{e}")))?;
        if count == 0 {
            return Err(bad("count must be positive".into()));
        }
        if count == 1 {
            return Ok(vec![start]);
        }
        return Ok((0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect());
    }
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>().map_err(|e| bad(format!("'{s}': {e}"))))
        .collect::<Result<Vec<_>, _>>()
        .and_then(|v| if v.is_empty() { Err(bad("no values".into())) } else { Ok(v) })
}

fn sweep(
    cli: &Cli,
    path: &Path,
    param: &str,
    values: &str,
    solver: Solver,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let template = GateConfig::load(path)?;
    let param: SweepParam = param.parse()?;
    if let Some(o) = out {
        check_distinct(o, &[path])?;
    }
    let spec = SweepSpec {
        param,
        values: parse_values(values)?,
        solver: match solver {
            Solver::Ld => CurveSolver::Ld,
            Solver::Full => CurveSolver::Full,
        },
        parallel: cli.parallel,
        curve: CurveOptions::default(),
    };
    let rows = run_sweep(&template, &spec)?;
    let mut csv = Vec::new();
    write_csv(&rows, param, &mut csv)?;
    if let Some(o) = out {
        std::fs::write(o, &csv).map_err(io_at(o))?;
    }
    let failures = rows.iter().filter(|r| r.point.failure.is_some()).count();
    emit(cli, "sweep", json!({ "param": param.name(), "rows": to_value(&rows), "failures": failures }), || {
        if out.is_some() {
            format!("{} rows ({failures} failed)\n", rows.len())
        } else {
            String::from_utf8_lossy(&csv).into_owned()
        }
    });
    Ok(())
}

fn budget(cli: &Cli, paths: &[PathBuf], draws: usize, recalibrate: bool) -> Result<(), CliError> {
    let mut budgets: Vec<(String, ErrorBudget)> = Vec::new();
    for path in paths {
        let (g, cfg) = load_config(path)?;
        let settings = g.budget.clone().unwrap_or_else(BudgetSettings::default);
        let ld = ld_gate_error(&cfg).bell_error;
        let full_cfg = if recalibrate {
            full::calibrate_full_omega(&cfg, 8)?
        } else {
            cfg.clone()
        };
        let full_error = full::full_gate_error(&full_cfg)?.bell_error;
        let sens = sensitivity(
            &cfg,
            &Jitter {
                draws,
                ..Jitter::default()
            },
        )?;
        let b = assemble_budget(
            &cfg,
            &SolutionErrors {
                full_error,
                ld_error: ld,
                sensitivity: sens,
            },
            &settings,
        )?;
        let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        budgets.push((label, b));
    }
    let table: Vec<(&str, &ErrorBudget)> = budgets.iter().map(|(l, b)| (l.as_str(), b)).collect();
    let body = json!({
        "budgets": budgets.iter().map(|(l, b)| json!({ "label": l, "budget": to_value(b) })).collect::<Vec<_>>()
    });
    emit(cli, "budget", body, || render_text(&table));
    Ok(())
}

fn read_stream(path: &Path) -> Result<(SampleStream, StreamFormat), CliError> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(io_at(path))?;
    if bytes.starts_with(STREAM_MAGIC) {
        Ok((SampleStream::read_binary(&bytes[..])?, StreamFormat::Binary))
    } else {
        Ok((SampleStream::read_text(&bytes[..])?, StreamFormat::Text))
    }
}

fn write_stream(stream: &SampleStream, format: StreamFormat, path: &Path) -> Result<(), CliError> {
    let f = File::create(path).map_err(io_at(path))?;
    let mut w = BufWriter::new(f);
    match format {
        StreamFormat::Text => stream.write_text(&mut w),
        StreamFormat::Binary => stream.write_binary(&mut w),
    }
    .and_then(|_| w.flush())
    .map_err(io_at(path))
}

fn load_curve(path: &Path) -> Result<TransferCurve, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_at(path))?;
    Ok(TransferCurve::parse(&text)?)
}

#[allow(clippy::too_many_arguments)]
fn compile_cmd(
    cli: &Cli,
    input: &Path,
    index: usize,
    rate: f64,
    bits: Option<u32>,
    format: StreamFormat,
    curve: Option<&Path>,
    out: &Path,
) -> Result<(), CliError> {
    let mut inputs = vec![input];
    inputs.extend(curve);
    check_distinct(out, &inputs)?;
    let pulse = if input.extension().is_some_and(|e| e == "json") {
        let f = File::open(input).map_err(io_at(input))?;
        let set: SolutionSet = serde_json::from_reader(BufReader::new(f))
            .map_err(|e| CliError::Input(format!("{}: {e}", input.display())))?;
        let n = set.solutions.len();
        set.solutions
            .into_iter()
            .nth(index)
            .ok_or_else(|| CliError::Input(format!("solution index {index} out of range ({n} solutions)")))?
            .pulse
    } else {
        load_config(input)?.1.pulse
    };
    let mut stream = compile(&pulse, rate, bits)?;
    if let Some(c) = curve {
        stream = compensate(&stream, &load_curve(c)?)?;
    }
    write_stream(&stream, format, out)?;
    let body = json!({
        "samples": stream.len(),
        "rate": stream.rate,
        "gate_time": pulse.gate_time(),
        "pulse_sha256": fastgate::config::pulse_hash(&pulse).iter().map(|b| format!("{b:02x}")).collect::<String>(),
        "out": out.display().to_string(),
    });
    emit(cli, "compile", body, || {
        format!("{} samples at {:e} S/s -> {}\n", stream.len(), stream.rate, out.display())
    });
    Ok(())
}

fn fit(cli: &Cli, path: &Path, segments: usize, out: Option<&Path>) -> Result<(), CliError> {
    if let Some(o) = out {
        check_distinct(o, &[path])?;
    }
    let trace = read_trace(path)?;
    let fit = fit_envelope(&trace, segments, &FitOptions::default())?;
    if let Some(o) = out {
        write_json(o, &fit)?;
    }
    emit(cli, "fit", to_value(&fit), || {
        let mut s = format!("{:>4} {:>12} {:>10} {:>12} {:>10}\n", "seg", "amplitude", "+-", "duration/ns", "+-");
        for i in 0..segments {
            let _ = writeln!(
                s,
                "{:>4} {:>12.6} {:>10.2e} {:>12.4} {:>10.4}",
                i + 1,
                fit.amplitudes[i],
                fit.amplitude_errors[i],
                fit.durations[i] * 1e9,
                fit.duration_errors[i] * 1e9
            );
        }
        let _ = writeln!(
            s,
            "edge {:.4} +- {:.4} ns, residual rms {:.3e}, noise {:.3e}",
            fit.edge_time * 1e9,
            fit.edge_time_error * 1e9,
            fit.residual_rms,
            fit.noise_estimate
        );
        s
    });
    Ok(())
}

fn compensate_cmd(cli: &Cli, stream_path: &Path, curve: &Path, out: &Path) -> Result<(), CliError> {
    check_distinct(out, &[stream_path, curve])?;
    let (stream, format) = read_stream(stream_path)?;
    let compensated = compensate(&stream, &load_curve(curve)?)?;
    write_stream(&compensated, format, out)?;
    emit(
        cli,
        "compensate",
        json!({ "samples": compensated.len(), "out": out.display().to_string() }),
        || format!("{} samples -> {}\n", compensated.len(), out.display()),
    );
    Ok(())
}
