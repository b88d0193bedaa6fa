use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn twr(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twr"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

const SCENARIO: &str = r#"{
  "P_dB": 20.0, "v": 3.0, "D": 0.5, "omega": 0.5,
  "interferers": {
    "T1": {"L": 2, "SIR_dB": 20},
    "T2": {"L": 2, "SIR_dB": 20},
    "R": {"L": 2, "SIR_dB": 20}
  }
}"#;

const SWEEP: &str = r#"{
  "variable": "P_dB",
  "range": {"start": 10.0, "stop": 30.0, "steps": 3},
  "metrics": ["outage_sys_mc", "outage_lb", "ber_asy"],
  "mc": {"n": 50000, "seed": 3}
}"#;

fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("scenario.json"), SCENARIO).unwrap();
    fs::write(dir.path().join("sweep.json"), SWEEP).unwrap();
    dir
}

#[test]
fn sweep_is_deterministic_across_runs_and_threads() {
    let dir = workspace();
    let base = [
        "sweep",
        "--scenario",
        "scenario.json",
        "--sweep",
        "sweep.json",
        "--out",
    ];
    let mut outputs = Vec::new();
    for (out, threads) in [("a.csv", "1"), ("b.csv", "1"), ("c.csv", "3")] {
        let mut args = base.to_vec();
        args.push(out);
        let o = Command::new(env!("CARGO_BIN_EXE_twr"))
            .args(&args)
            .current_dir(dir.path())
            .env("TWR_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(fs::read(dir.path().join(out)).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("P_dB,outage_sys_mc,outage_sys_mc_se,outage_lb,ber_asy")
    );
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn seed_override_changes_monte_carlo_columns() {
    let dir = workspace();
    let run = |seed: &str, out: &str| {
        let o = twr(
            &[
                "--seed",
                seed,
                "sweep",
                "--scenario",
                "scenario.json",
                "--sweep",
                "sweep.json",
                "--out",
                out,
            ],
            dir.path(),
        );
        assert_eq!(code(&o), 0);
        fs::read_to_string(dir.path().join(out)).unwrap()
    };
    let a = run("3", "a.csv");
    let b = run("4", "b.csv");
    let plain = twr(
        &[
            "sweep",
            "--scenario",
            "scenario.json",
            "--sweep",
            "sweep.json",
            "--out",
            "c.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&plain), 0);
    assert_eq!(a, fs::read_to_string(dir.path().join("c.csv")).unwrap());
    assert_ne!(a, b);
    let column = |csv: &str, i: usize| {
        csv.lines()
            .skip(1)
            .map(|l| l.split(',').nth(i).unwrap().to_string())
            .collect::<Vec<_>>()
    };
    assert_eq!(column(&a, 3), column(&b, 3));
}

#[test]
fn preset_sweep_uses_its_own_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let o = twr(
        &["sweep", "--sweep", "fig3", "--out", "fig3.csv"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("fig3.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("P_dB,outage_pro_mc,outage_pro_mc_se,outage_lb,outage_app,outage_asy")
    );
    let row: Vec<f64> = lines
        .find(|l| l.starts_with("3.00000000e1"))
        .unwrap()
        .split(',')
        .map(|c| c.parse().unwrap())
        .collect();
    assert!((row[3] - row[1]).abs() <= 3.0 * row[2], "{row:?}");
}

#[test]
fn sweep_input_errors() {
    let dir = workspace();
    fs::write(dir.path().join("broken.json"), "{\"P_dB\": 20").unwrap();
    let mut invalid: Value = serde_json::from_str(SCENARIO).unwrap();
    invalid["D"] = 1.5.into();
    fs::write(dir.path().join("invalid.json"), invalid.to_string()).unwrap();
    let mut quiet: Value = serde_json::from_str(SCENARIO).unwrap();
    quiet["interferers"]["R"] = serde_json::json!({"L": 2});
    fs::write(dir.path().join("quiet.json"), quiet.to_string()).unwrap();

    let cases: [(&[&str], i32); 6] = [
        (
            &[
                "sweep",
                "--scenario",
                "broken.json",
                "--sweep",
                "sweep.json",
                "--out",
                "x.csv",
            ],
            2,
        ),
        (
            &[
                "sweep",
                "--scenario",
                "scenario.json",
                "--sweep",
                "fig99",
                "--out",
                "x.csv",
            ],
            2,
        ),
        (&["sweep", "--sweep", "sweep.json", "--out", "x.csv"], 2),
        (
            &[
                "sweep",
                "--scenario",
                "invalid.json",
                "--sweep",
                "sweep.json",
                "--out",
                "x.csv",
            ],
            3,
        ),
        (
            &[
                "sweep",
                "--scenario",
                "quiet.json",
                "--sweep",
                "sweep.json",
                "--out",
                "x.csv",
            ],
            3,
        ),
        (
            &[
                "sweep",
                "--scenario",
                "missing.json",
                "--sweep",
                "sweep.json",
                "--out",
                "x.csv",
            ],
            2,
        ),
    ];
    for (args, expected) in cases {
        let o = twr(args, dir.path());
        assert_eq!(
            code(&o),
            expected,
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(!dir.path().join("x.csv").exists(), "{args:?}");
    }
}

#[test]
fn non_convergence_writes_partial_csv() {
    let dir = workspace();
    let spec = r#"{
      "variable": "gamma_th",
      "range": {"start": 1.0, "stop": 2000.0, "steps": 2},
      "metrics": ["outage_lb", "outage_asy"],
      "mc": {"n": 1000, "seed": 1}
    }"#;
    fs::write(dir.path().join("far.json"), spec).unwrap();
    let o = twr(
        &[
            "sweep",
            "--scenario",
            "scenario.json",
            "--sweep",
            "far.json",
            "--out",
            "far.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 4);
    let csv = fs::read_to_string(dir.path().join("far.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(!rows[1].contains("NaN"));
    assert!(rows[2].starts_with("2.00000000e3,NaN,"));
}

#[test]
fn optimize_modes() {
    let dir = workspace();
    let read = |name: &str| -> Value {
        serde_json::from_str(&fs::read_to_string(dir.path().join(name)).unwrap()).unwrap()
    };

    let o = twr(
        &[
            "optimize",
            "--scenario",
            "scenario.json",
            "--mode",
            "joint",
            "--out",
            "joint.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let joint = read("joint.json");
    assert_eq!(joint["mode"], "joint");
    assert_eq!(joint["trace"][1]["omega"].as_f64(), Some(0.5));
    assert_eq!(joint["trace"][1]["d"].as_f64(), Some(0.5));
    assert_eq!(joint["trace"].as_array().unwrap().len(), 4);

    for mode in ["omega", "location", "grid"] {
        let out = format!("{mode}.json");
        let o = twr(
            &[
                "optimize",
                "--scenario",
                "scenario.json",
                "--mode",
                mode,
                "--out",
                &out,
            ],
            dir.path(),
        );
        assert_eq!(code(&o), 0, "{mode}");
        let v = read(&out);
        assert!(v["objective"].as_f64().unwrap() > 0.0);
        assert!(
            (v["omega_opt"].as_f64().unwrap() - 0.5).abs() <= 1e-3,
            "{mode}: {v}"
        );
    }
}

#[test]
fn optimize_preset_long_run_reaches_grid_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let o = twr(
        &[
            "optimize",
            "--scenario",
            "fig6",
            "--mode",
            "joint",
            "--iterations",
            "50",
            "--out",
            "j.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let o = twr(
        &[
            "optimize",
            "--scenario",
            "fig6",
            "--mode",
            "grid",
            "--out",
            "g.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let objective = |f: &str| -> f64 {
        let v: Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(f)).unwrap()).unwrap();
        v["objective"].as_f64().unwrap()
    };
    let (j, g) = (objective("j.json"), objective("g.json"));
    assert!((j / g - 1.0).abs() < 1e-3, "{j} vs {g}");
}

#[test]
fn malformed_scenario_leaves_no_output() {
    let dir = workspace();
    fs::write(dir.path().join("broken.json"), "[1, 2").unwrap();
    let o = twr(
        &[
            "optimize",
            "--scenario",
            "broken.json",
            "--mode",
            "joint",
            "--out",
            "out.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
    assert!(!dir.path().join("out.json").exists());
    let o = twr(
        &[
            "optimize",
            "--scenario",
            "scenario.json",
            "--mode",
            "sideways",
            "--out",
            "out.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn injected_defect_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let o = twr(
        &[
            "validate",
            "--level",
            "fast",
            "--inject",
            "drop-relay-interference-term",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("criterion 1 FAIL"), "{stdout}");
}
