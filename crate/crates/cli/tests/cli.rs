use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

fn thickfam(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> (i32, Value, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_thickfam"))
        .current_dir(dir)
        .args(args)
        .env_remove("THICKFAM_DEPTH_BUDGET")
        .envs(env.iter().copied())
        .output()
        .expect("binary runs");
    let stdout = String::from_utf8(out.stdout).unwrap();
    let report = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap_or(-1), report, String::from_utf8(out.stderr).unwrap())
}

fn ok(dir: &Path, args: &[&str]) -> Value {
    let (code, report, err) = thickfam(dir, args, &[]);
    assert_eq!(code, 0, "{args:?} failed: {err} {report}");
    report
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("arclength"))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn dyadic_bush_validates_with_unit_epsilon() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["bush-gen", "--dyadic", "3"]);
    let r = ok(dir.path(), &["bush-validate"]);
    assert_eq!(r["status"], "pass");
    assert_eq!(r["epsilon"], "1");
    assert_eq!(r["lambda_max"], "1/2");
    assert_eq!(r["level_sizes"], serde_json::json!([1, 2, 4, 8]));
}

#[test]
fn exported_line_has_one_row_per_vertex() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["bush-gen", "--dyadic", "4"]);
    let r = ok(dir.path(), &["line-build", "--label", "010", "--export"]);
    // each bit splits every term into four, starting from the one-term root line
    let expected = 4usize.pow(3) + 1;
    assert_eq!(r["vertices"], expected);
    let csv = fs::read_to_string(dir.path().join("line_010.csv")).unwrap();
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), expected);
    assert_eq!(rows[0][0], "0");
    assert_eq!(rows[expected - 1][0], "1");
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(row.len(), 1 + 16);
        assert_eq!(row[0], thickfam::rational::ratio(k as i64, 64).to_string());
    }
}

#[test]
fn root_deviation_on_depth_one_is_one_half() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["bush-gen", "--dyadic", "1"]);
    for label in ["∅", "", "-"] {
        let r = ok(dir.path(), &["deviation-report", "--label", label]);
        assert_eq!(r["total"], "1/2");
        assert_eq!(r["guaranteed"], "1/2");
    }
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    let (code, report, _) = thickfam(p, &["bush-validate", "--bush", "missing.json"], &[]);
    assert_eq!(code, 2);
    assert_eq!(report["status"], "input-error");

    ok(p, &["bush-gen", "--dyadic", "2"]);
    assert_eq!(thickfam(p, &["line-build", "--label", "012"], &[]).0, 2);
    assert_eq!(thickfam(p, &["gauge-eval", "--vector", "1,2"], &[]).0, 2);
    assert_eq!(thickfam(p, &["line-build", "--label", "0101"], &[]).0, 3);

    let (code, _, err) =
        thickfam(p, &["bush-gen", "--dyadic", "5", "-o", "deep.json"], &[("THICKFAM_DEPTH_BUDGET", "3")]);
    assert_eq!(code, 3);
    assert!(err.contains("depth"), "{err}");
    assert!(!p.join("deep.json").exists());

    // a larger epsilon breaks separation
    let text = fs::read_to_string(p.join("bush.json")).unwrap();
    let mut doc: Value = serde_json::from_str(&text).unwrap();
    doc["epsilon"] = "3".into();
    fs::write(p.join("bad.json"), doc.to_string()).unwrap();
    let (code, report, _) = thickfam(p, &["bush-validate", "--bush", "bad.json", "--raw"], &[]);
    assert_eq!(code, 1);
    assert_eq!(report["checks"]["separation"], false);
}

#[test]
fn challenge_witness_round_trip_and_tampering() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    ok(p, &["bush-gen", "--dyadic", "5"]);
    for seed in ["1", "2", "3", "4"] {
        let r = ok(p, &["challenge", "--seed", seed, "--points", "3", "-o", "w.json"]);
        assert!(r["validation"]["depth"].as_u64().is_some());
        fs::write(p.join("c.json"), r["challenge"].to_string()).unwrap();
        let v = ok(p, &["witness-validate", "--challenge", "c.json", "--witness", "w.json"]);
        assert_eq!(v["status"], "pass");
        assert_eq!(v["alpha"], "1/4");

        // replaying the saved challenge file gives the same witness
        let again = ok(p, &["challenge", "--challenge", "c.json", "-o", "w2.json"]);
        assert_eq!(again["validation"], r["validation"]);
        assert_eq!(fs::read(p.join("w.json")).unwrap(), fs::read(p.join("w2.json")).unwrap());

        let mut w: Value = serde_json::from_str(&fs::read_to_string(p.join("w.json")).unwrap()).unwrap();
        w["deviation_total"] = "100".into();
        fs::write(p.join("bad.json"), w.to_string()).unwrap();
        let (code, report, _) =
            thickfam(p, &["witness-validate", "--challenge", "c.json", "--witness", "bad.json"], &[]);
        assert_eq!(code, 1);
        assert_eq!(report["honest_total"], false);
    }
}

#[test]
fn bush_and_lines_round_trip_through_export() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    ok(p, &["bush-gen", "--random", "17", "--depth", "3"]);
    let r = ok(p, &["export", "--depth", "2", "--out", "out"]);
    assert_eq!(r["files"], 7 + 2);
    assert_eq!(fs::read(p.join("bush.json")).unwrap(), fs::read(p.join("out/bush.json")).unwrap());
    let v = ok(p, &["bush-validate", "--bush", "out/bush.json"]);
    assert_eq!(v["status"], "pass");

    let table = fs::read_to_string(p.join("out/lines/01.csv")).unwrap();
    let parsed = thickfam::io::read_line_table(&table).unwrap();
    assert_eq!(parsed.label, thickfam::Label::parse("01").unwrap());
    ok(p, &["line-build", "--label", "01", "--export", "again.csv"]);
    assert_eq!(table, fs::read_to_string(p.join("again.csv")).unwrap());
}

#[test]
fn identical_runs_give_identical_reports() {
    let run = || {
        let dir = TempDir::new().unwrap();
        let p = dir.path();
        let mut outputs = Vec::new();
        ok(p, &["bush-gen", "--random", "5", "--depth", "3"]);
        for args in [
            &["bush-validate"][..],
            &["challenge", "--seed", "9"],
            &["alpha-bruteforce", "--family-depth", "1", "--n-max", "1"],
            &["deviation-report", "--label", "1"],
        ] {
            let out = Command::new(env!("CARGO_BIN_EXE_thickfam"))
                .current_dir(p)
                .args(args)
                .output()
                .unwrap();
            outputs.push(out.stdout);
        }
        outputs.push(fs::read(p.join("bush.json")).unwrap());
        outputs.push(fs::read(p.join("witness.json")).unwrap());
        outputs
    };
    assert_eq!(run(), run());
}

#[test]
fn gauge_matches_the_norm_where_the_functional_is_tight() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    ok(p, &["bush-gen", "--dyadic", "2"]);
    // on the root direction the functional equals the norm, so the gauge is pinned
    let r = ok(p, &["gauge-eval", "--vector", "1,1,1,1"]);
    assert_eq!(r["norm"], r["functional"]);
    assert_eq!(r["gauge"], r["norm"]);
    let r = ok(p, &["gauge-eval", "--vector", "-1,0,0,2"]);
    assert_eq!(r["within_bounds"], true);
}

#[test]
fn brute_force_bound_meets_the_quarter_epsilon_guarantee() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    ok(p, &["bush-gen", "--dyadic", "2"]);
    let r = ok(p, &["alpha-bruteforce", "--family-depth", "2", "--n-max", "1"]);
    let bound = thickfam::parse_rational(r["bound"].as_str().unwrap()).unwrap();
    assert!(bound >= thickfam::rational::ratio(1, 4), "{bound}");
    assert!(r["worst_response"].is_object());
}

#[test]
fn decimal_tables_parse_as_floats() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    ok(p, &["bush-gen", "--dyadic", "2"]);
    ok(p, &["line-build", "--label", "1", "--export", "t.csv", "--format", "decimal"]);
    let csv = fs::read_to_string(p.join("t.csv")).unwrap();
    assert!(csv.starts_with("# label=1"));
    for row in data_rows(&csv) {
        for cell in row {
            cell.parse::<f64>().unwrap();
        }
    }
}
