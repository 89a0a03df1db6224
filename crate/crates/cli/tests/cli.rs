use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn run(cmd: &str, spec: &Value, out: &Path, extra: &[&str]) -> Output {
    fs::create_dir_all(out).unwrap();
    let spec_path = out.join("spec.json");
    fs::write(&spec_path, serde_json::to_string(spec).unwrap()).unwrap();
    Command::new(env!("CARGO_BIN_EXE_sobolev-homeo"))
        .arg(cmd)
        .arg("--spec")
        .arg(&spec_path)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn staircase_n3_polynomial_samples() {
    let dir = tempfile::tempdir().unwrap();
    let spec = json!({
        "command": "staircase",
        "params": {"ramp": "polynomial", "indices": [3], "samples": 9, "final_lp_max": null}
    });
    let o = run("staircase", &spec, dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("staircase_samples_n3.csv"));
    assert_eq!(rows.len(), 10);
    let f = |i: usize| rows[i][1].parse::<f64>().unwrap();
    assert!((f(1) - 2.0 / 9.0).abs() < 1e-15);
    assert!((f(3) - 1.0 / 3.0).abs() < 1e-15);
    assert!((f(9) - 1.0).abs() < 1e-15);
}

#[test]
fn single_cell_staircase() {
    let dir = tempfile::tempdir().unwrap();
    let spec = json!({"command": "staircase", "params": {"indices": [1], "final_lp_max": null}});
    let o = run("staircase", &spec, dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(csv_rows(&dir.path().join("staircase_table.csv")).len(), 1);
}

#[test]
fn unknown_keys_exit_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let top = json!({"command": "twist", "param": {}});
    let o = run("twist", &top, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown field"), "{}", stderr(&o));

    let nested = json!({"command": "twist", "params": {"points": 10, "dim": 3}});
    let o = run("twist", &nested, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dim"), "{}", stderr(&o));
}

#[test]
fn spec_for_another_command_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("staircase", &json!({"command": "twist"}), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn same_spec_and_seed_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let specs = [
        (
            "twist",
            json!({"command": "twist", "seed": 7, "params": {"points": 200}}),
        ),
        (
            "verify",
            json!({"command": "verify", "params": {"criteria": [3, 8, 9], "timing": false}}),
        ),
    ];
    for (cmd, spec) in specs {
        for emit in ["csv", "json"] {
            let (a, b) = (
                dir.path().join(format!("{cmd}_{emit}_a")),
                dir.path().join(format!("{cmd}_{emit}_b")),
            );
            for d in [&a, &b] {
                let o = run(cmd, &spec, d, &["--emit", emit]);
                assert!(o.status.success(), "{}", stderr(&o));
            }
            let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
            names.sort();
            assert!(names.len() > 1);
            for n in names {
                assert_eq!(
                    fs::read(a.join(&n)).unwrap(),
                    fs::read(b.join(&n)).unwrap(),
                    "{n:?} differs"
                );
            }
        }
    }
}

#[test]
fn seed_flag_overrides_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = json!({"command": "twist", "seed": 1, "params": {"dims": [3], "points": 20}});
    let read = |d: &Path| fs::read(d.join("twist_census.csv")).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run("twist", &spec, &a, &[]).status.success());
    assert!(run("twist", &spec, &b, &["--seed", "2"]).status.success());
    assert_ne!(read(&a), read(&b));
}

#[test]
fn empty_verify_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        "verify",
        &json!({"command": "verify", "params": {"criteria": []}}),
        dir.path(),
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(csv_rows(&dir.path().join("verify_criteria.csv")).is_empty());
}

#[test]
fn infeasible_pair_reports_failures() {
    let dir = tempfile::tempdir().unwrap();
    let spec = json!({
        "command": "approx1d",
        "params": {"f": {"kind": "identity"}, "target": {"kind": "constant", "value": 2.0}}
    });
    let o = run("approx1d", &spec, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    let failures: Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    let names: Vec<&str> = failures
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["feasible"]);
}

#[test]
fn identity_with_unit_target() {
    let dir = tempfile::tempdir().unwrap();
    let spec = json!({
        "command": "approx1d",
        "params": {"f": {"kind": "identity"}, "target": {"kind": "constant", "value": 1.0}}
    });
    let o = run("approx1d", &spec, dir.path(), &["--emit", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("approx1d.json")).unwrap()).unwrap();
    assert_eq!(v["command"], "approx1d");
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
}

#[test]
fn zero_profile_twist_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let spec = json!({
        "command": "twist",
        "params": {"dims": [3], "planes": [{"kind": "constant", "theta": 0.0}], "points": 50}
    });
    let o = run("twist", &spec, dir.path(), &["--emit", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn identity_field_levels() {
    let dir = tempfile::tempdir().unwrap();
    let spec = json!({
        "command": "theoremb",
        "params": {
            "field": {"kind": "constant", "rotation": [[1.0, 0.0], [0.0, 1.0]]},
            "levels": [2],
            "grid": 64,
            "pack_resolution": 128,
            "det_points": 200
        }
    });
    let o = run("theoremb", &spec, dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("theoremb_levels.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "2");
}
