use std::path::Path;
use std::process::{Command, Output};

fn leocf() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_leocf"));
    c.env_remove("LEOCF_OUT_DIR");
    c
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const COVERAGE: &str = r#"{"experiments": [{
    "name": "cov",
    "base": {"sap_density": 1e-5, "ut_density": 3e-6},
    "sweep": {"threshold_db": [-2, 0, 2, 4, 6, 8]},
    "engines": ["analytic", "monte-carlo"],
    "trials": 400,
    "seed": 17
}]}"#;

#[test]
fn coverage_csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", COVERAGE);
    let out = dir.path().join("out");
    let o = leocf().arg("run").arg(&cfg).arg("--out-dir").arg(&out).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("cov.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("threshold_db,coverage_analytic,coverage_mc,ci_low,ci_high"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6);
    for r in rows {
        for v in r.split(',') {
            assert!(v == "outage" || v.parse::<f64>().map(f64::is_finite).unwrap_or(false), "{v}");
        }
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["partial"], false);
    assert!(manifest["outputs"].as_array().unwrap().iter().any(|o| o["file"] == "cov.csv"));
    assert_eq!(manifest["experiments"][0]["network"]["sap_density"], 1e-5);
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", COVERAGE);
    let run = |threads: &str, sub: &str| {
        let out = dir.path().join(sub);
        let o = leocf()
            .args(["run", cfg.to_str().unwrap(), "--threads", threads, "--out-dir"])
            .arg(&out)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(out.join("cov_monte-carlo.csv")).unwrap()
    };
    let a = run("1", "a");
    let b = run("4", "b");
    let c = run("4", "c");
    assert_eq!(a, b);
    assert_eq!(b, c);
}

#[test]
fn seed_flag_overrides_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", COVERAGE);
    let run = |seed: Option<&str>, sub: &str| {
        let out = dir.path().join(sub);
        let mut c = leocf();
        c.args(["run", cfg.to_str().unwrap(), "--out-dir"]).arg(&out);
        if let Some(s) = seed {
            c.args(["--seed", s]);
        }
        assert!(c.output().unwrap().status.success());
        std::fs::read(out.join("cov_monte-carlo.csv")).unwrap()
    };
    assert_eq!(run(None, "a"), run(Some("17"), "b"));
    assert_ne!(run(None, "c"), run(Some("18"), "d"));
}

#[test]
fn env_var_sets_default_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &COVERAGE.replace(r#""analytic", "monte-carlo""#, r#""analytic""#));
    let out = dir.path().join("from-env");
    let o = leocf()
        .env("LEOCF_OUT_DIR", &out)
        .current_dir(dir.path())
        .arg("run")
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("cov_analytic.csv").exists());
    assert!(out.join("manifest.json").exists());
}

#[test]
fn parse_error_exit_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", "{\"experiments\": [\n  {\"name\": \"x\",, }\n]}");
    let o = leocf().arg("validate").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
    let o = leocf().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_field_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &COVERAGE.replace("\"trials\"", "\"trails\""));
    let o = leocf().arg("validate").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("trails"));
}

#[test]
fn missing_sap_density_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &COVERAGE.replace(r#""sap_density": 1e-5, "#, ""));
    let o = leocf().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("sap_density"));
}

#[test]
fn validate_reports() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(dir.path(), "ok.json", COVERAGE);
    let o = leocf().arg("validate").arg(&ok).output().unwrap();
    assert!(o.status.success());
    assert!(!stderr(&o).contains("invalid"));

    let eta = write(dir.path(), "eta.json", &COVERAGE.replace(r#""ut_density": 3e-6"#, r#""ut_density": 3e-6, "dome_angle_deg": 100"#));
    let o = leocf().arg("validate").arg(&eta).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("[0°, 90°]"), "{}", stderr(&o));

    let pilots = write(
        dir.path(),
        "tp.json",
        &COVERAGE.replace(r#""ut_density": 3e-6"#, r#""ut_density": 3e-6, "pilot_len": 600"#),
    );
    let o = leocf().arg("validate").arg(&pilots).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("coherence_len"), "{}", stderr(&o));
}

#[test]
fn numeric_failure_exit_4_flags_partial() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"experiments": [
        {"name": "fine", "base": {"sap_density": 1e-5, "ut_density": 3e-6},
         "sweep": {"threshold_db": [0, 5]}, "engines": ["analytic"]},
        {"name": "broken", "base": {"sap_density": 1e-5, "ut_density": 3e-6},
         "sweep": {"nakagami_m": [1, 2]}, "engines": ["analytic"], "ilt": {"a": 1500, "b": 11, "c": 15}}
    ]}"#;
    let cfg = write(dir.path(), "c.json", text);
    let out = dir.path().join("out");
    let o = leocf().arg("run").arg(&cfg).arg("--out-dir").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["partial"], true);
    let outputs = manifest["outputs"].as_array().unwrap();
    let flag = |f: &str| outputs.iter().find(|o| o["file"] == f).unwrap()["partial"].clone();
    assert_eq!(flag("fine_analytic.csv"), false);
    assert_eq!(flag("broken_analytic.csv"), true);
    let broken = std::fs::read_to_string(out.join("broken_analytic.csv")).unwrap();
    assert!(broken.starts_with("nakagami_m,threshold_db,coverage_analytic"));
}

#[test]
fn capacity_csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"experiments": [{
        "name": "cap", "base": {"sap_density": 1e-5, "ut_density": 3e-6},
        "sweep": {"ut_count": [1000, 4000]}, "engines": ["analytic", "nearest-baseline"],
        "output": "capacity", "capacity": {"bandwidth_hz": 1e6}, "trials": 300, "seed": 1
    }]}"#;
    let cfg = write(dir.path(), "c.json", text);
    let out = dir.path().join("out");
    let o = leocf().arg("run").arg(&cfg).arg("--out-dir").arg(&out).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("cap.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("n_users,system_capacity_cf,system_capacity_nearest,per_user_cf,per_user_nearest")
    );
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert!((r[1] / r[0] - r[3]).abs() <= 1e-9 * r[3]);
        assert!((r[2] / r[0] - r[4]).abs() <= 1e-9 * r[4]);
    }
}

#[test]
fn dss_and_walker_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"experiments": [
        {"name": "dss", "base": {"sap_density": 1e-5, "ut_density": 3e-6, "dome_angle_deg": 90},
         "sweep": {"pilot_len": [20, 200]}, "engines": ["analytic", "monte-carlo"], "output": "dss",
         "csi": {"mode": "trained"}, "trials": 300, "seed": 1, "dss_points": 10},
        {"name": "walk", "base": {"sap_density": 1e-5, "ut_density": 3e-6},
         "sweep": {"threshold_db": [0, 4, 8]}, "engines": ["walker"], "trials": 20, "seed": 1,
         "walker": {"inclinations_deg": [53], "num_planes": 28, "phase_mode": "fixed", "observer_lat_deg": 20}}
    ]}"#;
    let cfg = write(dir.path(), "c.json", text);
    let out = dir.path().join("out");
    let o = leocf().arg("run").arg(&cfg).arg("--out-dir").arg(&out).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let dss = std::fs::read_to_string(out.join("dss.csv")).unwrap();
    assert!(dss.starts_with("pilot_len,dss,ccdf_analytic,ccdf_mc\n"));
    assert_eq!(dss.lines().count(), 1 + 2 * 10);
    let walk = std::fs::read_to_string(out.join("walk_walker.csv")).unwrap();
    assert!(walk.starts_with("threshold_db,coverage_walker,ci_low,ci_high\n"));
}
