//! End-to-end runs of the command-line binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semitrailer"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn error_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|_| panic!("stderr is not JSON: {text}"))
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

const SHORT_SLALOM: &str = r#"{"kind": "slalom", "duration": 6.0, "speed_kmh": 30.0,
    "amplitude": 0.08, "frequency": 0.5, "lead_in": 1.0}"#;

#[test]
fn halving_dt_doubles_trajectory_rows() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("slalom.json"), SHORT_SLALOM).unwrap();
    ok(dir.path(), &["--out", "a", "--dt", "0.002", "simulate", "--maneuver", "slalom.json"]);
    ok(dir.path(), &["--out", "b", "--dt", "0.001", "simulate", "--maneuver", "slalom.json"]);
    let rows = |d: &str| read(dir.path().join(d).join("trajectory.csv")).lines().count() - 1;
    let (coarse, fine) = (rows("a"), rows("b"));
    assert_eq!(coarse, 3001);
    assert!((fine as i64 - 2 * coarse as i64).abs() <= 1, "{coarse} vs {fine}");
    let header = read(dir.path().join("a/trajectory.csv")).lines().next().unwrap().to_string();
    assert!(header.starts_with("t,v_y1,yawrate_1,kappa_2"));
    assert!(header.ends_with("y.F_z23R,y.F_z23L"));
    let diag: Value = serde_json::from_str(&read(dir.path().join("a/diagnostics.json"))).unwrap();
    assert_eq!(diag["config"]["effective"]["dt"], 0.002);
    assert!(diag["diagnostics"]["max_constraint_residual"].as_f64().unwrap() < 1e-6);
}

#[test]
fn unknown_maneuver_lists_the_options() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["--out", "x", "simulate", "--maneuver", "figure-eight"]);
    assert_eq!(out.status.code(), Some(1));
    let e = error_json(&out);
    assert_eq!(e["error"]["kind"], "invalid_maneuver");
    let msg = e["error"]["message"].as_str().unwrap();
    for name in ["slalom", "double-lane-change", "constant-turn", "validation-sequence", "identification-mix"] {
        assert!(msg.contains(name), "{msg}");
    }
}

#[test]
fn missing_dataset_fails_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["--out", "res", "identify", "--dataset", "nowhere.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"]["kind"], "io");
    assert!(!dir.path().join("res").exists());
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["simulate"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["launch"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["tire-curve", "--points", "many"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn generated_validation_sequence_spans_115_s() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["--out", "g", "generate", "--maneuver", "validation-sequence"]);
    let text = read(dir.path().join("g/inputs.csv"));
    let last = text.lines().last().unwrap();
    assert!(last.starts_with("115,"), "{last}");
    assert_eq!(text.lines().count(), 11_502);
    let spec: Value = serde_json::from_str(&read(dir.path().join("g/maneuver.json"))).unwrap();
    assert_eq!(spec["kind"], "validation-sequence");
}

#[test]
fn tire_curve_is_zero_at_zero_slip() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["--out", "t", "tire-curve", "--set", "front", "--points", "41", "--fz", "15000,30000"]);
    let text = read(dir.path().join("t/tire_curve.csv"));
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 41);
    assert_eq!(rows[20], vec![0.0, 0.0, 0.0]);
    assert!(rows[40][2] > rows[40][1] && rows[40][1] > 0.0);
    assert_eq!(rows[0][1], -rows[40][1]);
    let bad = run(dir.path(), &["--out", "t2", "tire-curve", "--set", "middle"]);
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(error_json(&bad)["error"]["kind"], "config");
}

#[test]
fn pipeline_is_reproducible_and_stays_in_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("turn.json"),
        r#"{"kind": "constant-turn", "duration": 8.0, "speed_kmh": 25.0, "amplitude": 0.12, "lead_in": 1.0}"#,
    )
    .unwrap();
    std::fs::write(d.join("id.json"), r#"{"restarts": 5, "pso": {"swarm_size": 5}, "dt": 0.02}"#).unwrap();
    ok(d, &["--out", "data", "--seed", "4", "--dt", "0.002", "generate", "--maneuver", "turn.json", "--synthesize"]);
    assert!(d.join("data/dataset.csv.meta.json").exists());

    let identify = |out: &str| {
        ok(
            d,
            &[
                "--out", out, "--seed", "11", "identify", "--dataset", "data/dataset.csv", "--config", "id.json",
                "--restarts", "2", "--iterations", "2", "--parameters", "mu,k",
            ],
        )
    };
    identify("id1");
    identify("id2");
    for f in ["identification.json", "identified_params.json", "run_config.json"] {
        assert_eq!(read(d.join("id1").join(f)), read(d.join("id2").join(f)), "{f} differs");
    }
    // flag over config file over default
    let report: Value = serde_json::from_str(&read(d.join("id1/identification.json"))).unwrap();
    let cfg = &report["report"]["config"];
    assert_eq!(cfg["restarts"], 2);
    assert_eq!(cfg["pso"]["swarm_size"], 5);
    assert_eq!(cfg["pso"]["max_iterations"], 2);
    assert_eq!(cfg["seed"], 11);
    assert_eq!(cfg["dt"], 0.02);
    assert_eq!(cfg["refine"]["max_iterations"], 50);
    assert_eq!(report["report"]["result"]["names"], serde_json::json!(["mu", "k"]));

    ok(d, &["--out", "val", "--params", "id1/identified_params.json", "validate", "--dataset", "data/dataset.csv"]);
    let val: Value = serde_json::from_str(&read(d.join("val/validation_report.json"))).unwrap();
    assert_eq!(val["report"]["channels"].as_array().unwrap().len(), 12);
    assert!(d.join("val/plots/plot_yawrate_1.csv").exists());

    ok(d, &["--out", "sim1", "simulate", "--dataset", "data/dataset.csv"]);
    ok(d, &["--out", "sim2", "simulate", "--dataset", "data/dataset.csv"]);
    assert_eq!(read(d.join("sim1/trajectory.csv")), read(d.join("sim2/trajectory.csv")));

    let mut entries: Vec<String> = std::fs::read_dir(d)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    entries.sort();
    assert_eq!(entries, ["data", "id.json", "id1", "id2", "sim1", "sim2", "turn.json", "val"]);
}
