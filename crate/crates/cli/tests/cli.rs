use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn twistforge(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_twistforge"));
    cmd.args(args).env_remove("TWISTFORGE_JOBS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn json_out(out: &Output) -> Value {
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn spec_file(name: &str, body: &str) -> PathBuf {
    let path =
        std::env::temp_dir().join(format!("twistforge-cli-{}-{name}.json", std::process::id()));
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn localdata_split_multiplicative_at_11() {
    let v = json_out(&twistforge(
        &["localdata", "--p", "11", "--ainvs", "[0,-1,1,-10,-20]"],
        &[],
    ));
    assert_eq!(v["type"], "I5");
    assert_eq!(v["c"], 5);
    assert_eq!(v["f"], 1);
}

#[test]
fn localdata_accepts_fraction_strings_and_curve_objects() {
    let flags = json_out(&twistforge(
        &[
            "localdata",
            "--p",
            "2",
            "--ainvs",
            r#"["1","0","0","-1/4","2"]"#,
        ],
        &[],
    ));
    let object = json_out(&twistforge(
        &[
            "localdata",
            "--curve",
            r#"{"ainvs":["1","0","0","-1/4","2"],"p":2}"#,
        ],
        &[],
    ));
    assert_eq!(flags, object);
}

#[test]
fn twist_of_iii_star_with_v_a1_one_by_minus_one() {
    let v = json_out(&twistforge(
        &[
            "twist",
            "--p",
            "2",
            "--d",
            "-1",
            "--ainvs",
            "[2,0,-4,-4,-4]",
        ],
        &[],
    ));
    assert_eq!(v["base"]["type"], "III*");
    assert_eq!(v["twisted"]["type"], "I2*");
}

#[test]
fn strongmin_reports_model_and_isomorphism() {
    let v = json_out(&twistforge(
        &["strongmin", "--p", "3", "--ainvs", "[0,0,0,-27,55]"],
        &[],
    ));
    assert!(v["model"].as_array().is_some_and(|a| a.len() == 5));
    assert!(v["isomorphism"]["u"].is_number() || v["isomorphism"]["u"].is_string());
    assert!(v["type"].is_string());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(
        twistforge(&["verify", "--spec", "missing.json"], &[])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(twistforge(&["bogus"], &[]).status.code(), Some(1));
    assert_eq!(
        twistforge(&["localdata", "--p", "4", "--ainvs", "[0,0,0,1,1]"], &[])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        twistforge(&["twist", "--p", "2", "--ainvs", "[0,0,0,1,1]"], &[])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        twistforge(&["localdata", "--p", "5", "--ainvs", "[0,0,0,0,0]"], &[])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn verify_reports_are_deterministic_across_job_counts() {
    let spec = spec_file(
        "det",
        r#"{"p": 2, "box": [[-2,2],[-2,2],[-2,2],[-2,2],[-2,2]], "dset": [-1, 2]}"#,
    );
    let spec = spec.to_str().unwrap();
    let serial = twistforge(&["verify", "--spec", spec, "--jobs", "1"], &[]);
    let again = twistforge(&["verify", "--spec", spec, "--jobs", "1"], &[]);
    let parallel = twistforge(&["verify", "--spec", spec, "--jobs", "4"], &[]);
    assert_eq!(serial.status.code(), Some(0));
    assert_eq!(serial.stdout, again.stdout);
    assert_eq!(serial.stdout, parallel.stdout);

    let lines: Vec<Value> = serial
        .stdout
        .split(|b| *b == b'\n')
        .filter(|l| !l.is_empty())
        .map(|l| serde_json::from_slice(l).unwrap())
        .collect();
    let summary = lines.last().unwrap();
    assert_eq!(summary["summary"], true);
    assert_eq!(summary["disagreements"], 0);
    let total = summary["total"].as_u64().unwrap();
    assert_eq!(
        total,
        summary["agreements"].as_u64().unwrap() + summary["skipped_singular"].as_u64().unwrap()
    );
    assert_eq!(
        lines.len() as u64 - 1,
        summary["agreements"].as_u64().unwrap() + summary["skipped_singular"].as_u64().unwrap()
    );
}

#[test]
fn jobs_environment_variable_overrides_flag() {
    let spec = spec_file(
        "env",
        r#"{"p": 3, "box": [[0,1],[0,1],[0,1],[0,1],[0,1]], "dset": [3]}"#,
    );
    let spec = spec.to_str().unwrap();
    let bad = twistforge(
        &["verify", "--spec", spec, "--jobs", "2"],
        &[("TWISTFORGE_JOBS", "zero")],
    );
    assert_eq!(bad.status.code(), Some(1));
    let good = twistforge(
        &["verify", "--spec", spec, "--jobs", "2"],
        &[("TWISTFORGE_JOBS", "1")],
    );
    assert_eq!(good.status.code(), Some(0));
}

#[test]
fn singular_box_is_counted() {
    let spec = spec_file(
        "sing",
        r#"{"p": 5, "box": [[0,0],[0,0],[0,0],[0,0],[0,0]], "dset": [1]}"#,
    );
    let out = twistforge(&["verify", "--spec", spec.to_str().unwrap()], &[]);
    let text = String::from_utf8(out.stdout).unwrap();
    let summary: Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(summary["skipped_singular"], 1);
    assert_eq!(summary["total"], 1);
}

#[test]
fn tables_render() {
    let out = twistforge(&["tables", "twist_odd"], &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(!out.stdout.is_empty());
    assert_eq!(twistforge(&["tables", "nope"], &[]).status.code(), Some(1));
}
