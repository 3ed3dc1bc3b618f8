use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qpt_core::SpamScenario;
use tomo::config::{ExperimentConfig, GateSpec};
use tomo::files::ReconstructionResult;

fn tomo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tomo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = tomo(args);
    assert!(
        out.status.success(),
        "tomo {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_config(dir: &Path, name: &str, config: &ExperimentConfig) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn benchmark(gate: GateSpec, trials: usize, seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(gate, 1);
    c.scenario = SpamScenario::benchmark();
    c.trials = trials;
    c.seed = seed;
    c
}

#[test]
fn simulation_is_deterministic_in_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "h.json", &benchmark(GateSpec::Hadamard, 3, 99));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["simulate", "--config", s(&cfg), "--out", s(&a)]);
    ok(&["simulate", "--config", s(&cfg), "--out", s(&b)]);
    for trial in 0..3 {
        let name = format!("counts/trial_{trial:04}.csv");
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap());
    }
    assert!(a.join("protocol.json").exists());
    let c = dir.path().join("c");
    ok(&["simulate", "--config", s(&cfg), "--out", s(&c), "--seed", "100"]);
    assert_ne!(
        fs::read(a.join("counts/trial_0000.csv")).unwrap(),
        fs::read(c.join("counts/trial_0000.csv")).unwrap()
    );
}

#[test]
fn exact_mode_writes_one_noise_free_record() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ExperimentConfig::new(GateSpec::Hadamard, 1);
    config.trials = 5;
    config.exact = true;
    let cfg = write_config(dir.path(), "h.json", &config);
    let out = dir.path().join("sim");
    ok(&["simulate", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(fs::read_dir(out.join("counts")).unwrap().count(), 1);
    let res = dir.path().join("res");
    let stdout = ok(&[
        "reconstruct",
        "--counts",
        s(&out.join("counts")),
        "--rank",
        "1",
        "--out",
        s(&res),
    ]);
    assert!(stdout.contains("rank 1"), "{stdout}");
    let result: ReconstructionResult =
        serde_json::from_str(&fs::read_to_string(res.join("trial_0000.standard.json")).unwrap()).unwrap();
    assert!(result.fidelity.unwrap() > 1.0 - 1e-6);
}

#[test]
fn calibrated_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let empty = write_config(d, "empty.json", &benchmark(GateSpec::Identity, 1, 1));
    let gate = write_config(d, "h.json", &benchmark(GateSpec::Hadamard, 2, 2));
    ok(&["simulate", "--config", s(&empty), "--out", s(&d.join("empty"))]);
    ok(&["simulate", "--config", s(&gate), "--out", s(&d.join("h"))]);
    let cal = d.join("cal.json");
    let stdout = ok(&[
        "calibrate",
        "--counts",
        s(&d.join("empty/counts/trial_0000.csv")),
        "--out",
        s(&cal),
    ]);
    assert!(stdout.contains("identity fidelity"), "{stdout}");
    let counts = d.join("h/counts");
    let results = d.join("results");
    for model in ["standard", "gn", "ng"] {
        ok(&[
            "reconstruct",
            "--counts",
            s(&counts),
            "--model",
            model,
            "--calibration",
            s(&cal),
            "--out",
            s(&results),
        ]);
    }
    ok(&[
        "reconstruct",
        "--counts",
        s(&counts),
        "--model",
        "ippm-true",
        "--config",
        s(&gate),
        "--out",
        s(&results),
    ]);
    assert_eq!(fs::read_dir(&results).unwrap().count(), 8);

    let tables = d.join("tables");
    ok(&["report", s(&results), "--out", s(&tables)]);
    let fid = fs::read_to_string(tables.join("fidelity_vs_n.csv")).unwrap();
    let mut lines = fid.lines();
    assert!(lines.next().unwrap().contains("q1,q3"));
    assert_eq!(lines.count(), 4);
    let grid = fs::read_to_string(tables.join("chi_pauli_gn_n1000_real.csv")).unwrap();
    assert_eq!(grid.lines().count(), 4);
    assert!(grid.lines().all(|l| l.split(',').count() == 4));
    assert!(tables.join("infidelity_histogram.csv").exists());
    assert!(tables.join("rank_ladder.csv").exists());

    let structured = d.join("structured");
    ok(&["report", s(&results), "--format", "structured", "--out", s(&structured)]);
    assert!(structured.join("report.json").exists());
}

#[test]
fn reconstruction_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_config(d, "h.json", &benchmark(GateSpec::Hadamard, 1, 5));
    ok(&["simulate", "--config", s(&cfg), "--out", s(&d.join("sim"))]);
    let counts = d.join("sim/counts/trial_0000.csv");
    ok(&["reconstruct", "--counts", s(&counts), "--out", s(&d.join("r1"))]);
    ok(&["reconstruct", "--counts", s(&counts), "--out", s(&d.join("r2"))]);
    let name = "trial_0000.standard.json";
    assert_eq!(
        fs::read(d.join("r1").join(name)).unwrap(),
        fs::read(d.join("r2").join(name)).unwrap()
    );
}

#[test]
fn exit_codes_distinguish_failures() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let mut bad = ExperimentConfig::new(GateSpec::Hadamard, 1);
    bad.trials = 0;
    let cfg = write_config(d, "bad.json", &bad);
    let out = tomo(&["simulate", "--config", s(&cfg), "--out", s(&d.join("x"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trials"));

    let out = tomo(&["simulate", "--config", s(&d.join("missing.json")), "--out", s(&d.join("x"))]);
    assert_eq!(out.status.code(), Some(4));

    let cfg = write_config(d, "h.json", &benchmark(GateSpec::Hadamard, 1, 3));
    ok(&["simulate", "--config", s(&cfg), "--out", s(&d.join("sim"))]);
    let out = tomo(&[
        "reconstruct",
        "--counts",
        s(&d.join("sim/counts")),
        "--model",
        "gn",
        "--out",
        s(&d.join("r")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("calibration"));

    let out = tomo(&["report", s(&d.join("nothing-here")), "--out", s(&d.join("t"))]);
    assert_eq!(out.status.code(), Some(4));
    fs::create_dir(d.join("empty")).unwrap();
    let out = tomo(&["report", s(&d.join("empty")), "--out", s(&d.join("t"))]);
    assert_eq!(out.status.code(), Some(2));
}
