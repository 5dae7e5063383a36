use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fastgate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fastgate"))
        .args(args)
        .env_remove("FASTGATE_PARALLEL")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const HF: &str = r#"
calibrate_omega = true
[trap]
f_c = 1.9243e6
eta_c = 0.126
[pulse]
symmetric = true
edge_time = 5e-9
omega_peak = 1.0e7
nu = 2.6301e6
segments = [
  { duration = 82.1e-9, amplitude = 0.445 },
  { duration = 299.9e-9, amplitude = 0.838 },
  { duration = 819.5e-9, amplitude = 1.0 },
]
[sim]
phi0_grid_size = 4
"#;

const SPACE: &str = r#"
segments = 7
gate_time = 1.6e-6
nu_range = [1.9627e6, 3.2662e6]
max_evaluations = 60
restarts = 0
full_budget = 0
sensitivity_draws = 5
epsilon_t = 1.0
[trap]
f_c = 1.9243e6
eta_c = 0.126
"#;

#[test]
fn simulate_ld_reports_a_good_gate() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "hf.toml", HF);
    let out = dir.path().join("hf.json");
    let o = fastgate(&["--json", "simulate", s(&cfg), "--solver", "ld", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = json(&o);
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["command"], "simulate");
    assert!(doc["bell_error"].as_f64().unwrap() < 1e-3);
    let written: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(written["schema_version"], 1);
    let csv = fs::read_to_string(dir.path().join("hf.trajectory.csv")).unwrap();
    assert!(csv.starts_with("phi0,branch,t,"));
}

#[test]
fn shipped_configs_simulate() {
    for name in ["high_fidelity.toml", "fastest.toml", "adiabatic.toml", "rectangular.toml"] {
        let o = fastgate(&["simulate", s(&configs().join(name))]);
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn missing_file_is_a_config_error() {
    let o = fastgate(&["simulate", "/nonexistent/gate.toml"]);
    assert_eq!(code(&o), 1);
    assert!(!o.stderr.is_empty());
}

#[test]
fn unknown_field_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "bad.toml", &format!("{HF}\nbogus = 1\n"));
    assert_eq!(code(&fastgate(&["simulate", s(&cfg)])), 1);
}

#[test]
fn tiny_grid_is_a_numerical_error() {
    let dir = TempDir::new().unwrap();
    let text = HF.replace("phi0_grid_size = 4", "phi0_grid_size = 2\ngrid_points = [16, 16]\ngrid_extent = [3.0, 3.0]");
    let cfg = write(&dir, "tiny.toml", &text);
    let o = fastgate(&["simulate", s(&cfg), "--solver", "full"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid too small"));
}

#[test]
fn unsatisfiable_screen_exits_3() {
    let dir = TempDir::new().unwrap();
    let space = write(&dir, "space.toml", &SPACE.replace("epsilon_t = 1.0", "epsilon_t = 1e-12"));
    let o = fastgate(&["optimize", s(&space), "--seeds", "2"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn optimize_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let space = write(&dir, "space.toml", SPACE);
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for (out, par) in [(&a, "1"), (&b, "2")] {
        let o = fastgate(&["--parallel", par, "optimize", s(&space), "--seeds", "3", "--rng", "9", "--out", s(out)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn single_value_sweep_gives_one_row() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = fastgate(&[
        "sweep",
        s(&configs().join("rectangular.toml")),
        "--param",
        "gate_time",
        "--values",
        "2.13e-6",
        "--solver",
        "ld",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 2, "{csv}");
}

#[test]
fn sweep_output_is_independent_of_parallelism() {
    let run = |par: &str| {
        let o = fastgate(&[
            "--parallel",
            par,
            "sweep",
            s(&configs().join("rectangular.toml")),
            "--param",
            "gate_time",
            "--values",
            "1.5e-6:3e-6:4",
            "--solver",
            "ld",
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        o.stdout
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn sweep_json_carries_the_schema_version() {
    let o = fastgate(&[
        "--json",
        "sweep",
        s(&configs().join("rectangular.toml")),
        "--param",
        "nu",
        "--values",
        "2.3e6,2.4e6",
        "--solver",
        "ld",
    ]);
    assert_eq!(code(&o), 0);
    let doc = json(&o);
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn budget_lists_every_component() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "hf.toml", HF);
    let o = fastgate(&["--json", "budget", s(&cfg), "--draws", "5", "--no-recalibrate"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = json(&o);
    let rows = doc["budgets"][0]["budget"]["rows"].as_array().unwrap();
    let names: Vec<&str> = rows.iter().map(|r| r["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"out_of_ld") && names.contains(&"scattering") && names.contains(&"heating"));
}

#[test]
fn compile_fit_compensate_pipeline() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "hf.toml", HF);
    let before = fs::read(&cfg).unwrap();
    let text = dir.path().join("hf.stream");
    let o = fastgate(&["--json", "compile", s(&cfg), "--out", s(&text)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    // t_g = 1583.5 ns of segments plus one 5 ns edge; ceil(1.5885e-6 * 1.25e9).
    assert_eq!(json(&o)["samples"], 1986);

    let bin = dir.path().join("hf.bin");
    assert_eq!(code(&fastgate(&["compile", s(&cfg), "--format", "binary", "--out", s(&bin)])), 0);

    // Photodiode-style trace from the text stream.
    let body = fs::read_to_string(&text).unwrap();
    let samples: Vec<f64> = body.lines().filter(|l| !l.starts_with('#')).map(|l| l.parse().unwrap()).collect();
    let trace: String = samples
        .iter()
        .enumerate()
        .map(|(k, v)| format!("{:?} {v:?}\n", (k as f64 + 0.5) / 1.25e9))
        .collect();
    let trace_path = write(&dir, "trace.txt", &trace);
    let o = fastgate(&["--json", "fit", s(&trace_path), "--segments", "5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let fit = json(&o);
    let d = fit["durations"].as_array().unwrap();
    assert!((d[0].as_f64().unwrap() - 82.1e-9).abs() < 0.01e-9);

    let curve = write(&dir, "curve.txt", "0 0\n0.25 0.0625\n0.5 0.25\n0.75 0.5625\n1 1\n");
    let comp = dir.path().join("comp.bin");
    let o = fastgate(&["compensate", s(&bin), "--curve", s(&curve), "--out", s(&comp)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::metadata(&comp).unwrap().len() > 0);

    // Inputs are never overwritten.
    assert_eq!(code(&fastgate(&["compensate", s(&bin), "--curve", s(&curve), "--out", s(&bin)])), 1);
    assert_eq!(fs::read(&cfg).unwrap(), before);
}

#[test]
fn unreachable_amplitude_is_a_numerical_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "hf.toml", HF);
    let stream = dir.path().join("hf.stream");
    assert_eq!(code(&fastgate(&["compile", s(&cfg), "--out", s(&stream)])), 0);
    let curve = write(&dir, "curve.txt", "0 0\n0.5 0.4\n1 0.7\n");
    let o = fastgate(&["compensate", s(&stream), "--curve", s(&curve), "--out", s(&dir.path().join("c.stream"))]);
    assert_eq!(code(&o), 2);
}
