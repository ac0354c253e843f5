use std::path::Path;
use std::process::{Command, Output};

use hk_dichotomy::{ConditionId, Verdict};
use hk_dichotomy_cli::spec::InputTolerances;
use hk_dichotomy_cli::{example_spec, run_analysis, AnalysisConfig, CliError, SpecFile, DEFAULT_CONDITIONS};
use serde_json::{json, Value};
use std::f64::consts::LN_2;

const TOL: InputTolerances = InputTolerances { projector: 1e-9, invariance: 1e-10 };

fn hkdich(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hkdich")).args(args).output().expect("binary runs")
}

fn write_spec(dir: &Path, name: &str, value: &Value) -> String {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path.display().to_string()
}

fn diagonal_spec(h: Value) -> Value {
    let a: Vec<Value> = (0..8).map(|_| json!([0.5, 0.0, 0.0, 2.0])).collect();
    json!({
        "dimension": 2,
        "window": 8,
        "system": { "matrices": a },
        "projectors": { "constant": [1.0, 0.0, 0.0, 0.0] },
        "rates": { "h": h, "k": { "kind": "exponential", "alpha": LN_2 } }
    })
}

#[test]
fn verify_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "s.json", &diagonal_spec(json!({"kind": "exponential", "alpha": LN_2})));
    let a = hkdich(&["verify", &spec]);
    let b = hkdich(&["verify", &spec]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let cert: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert!(cert.get("timing_ms").is_none());
    assert_eq!(cert["selected_verdict"], "HOLDS-ON-WINDOW");
}

#[test]
fn explicit_diagonal_matches_closed_form() {
    // diag(1/2, 2) with h = k = 2^n: every first-kind ratio is exactly 1.
    let spec: SpecFile = serde_json::from_value(diagonal_spec(json!({"kind": "exponential", "alpha": LN_2}))).unwrap();
    let inputs = spec.inputs(None, None, TOL).unwrap();
    let config = AnalysisConfig::new(8, inputs.system.norm(), inputs.tilde.clone(), DEFAULT_CONDITIONS.to_vec());
    let cert = run_analysis(&inputs, &config).unwrap();
    for id in [ConditionId::Hd1, ConditionId::Kd1, ConditionId::Hd2, ConditionId::Kd2] {
        let c = cert.condition(id).unwrap();
        assert!(c.estimate.envelope.iter().all(|v| (v - 1.0).abs() < 1e-12), "{id}");
    }
    assert!(cert.checks.cocycle_pass);
    assert!(cert.checks.skew_identities.pass);
    assert_eq!(cert.exit_code(), 0);
}

#[test]
fn csv_has_one_row_per_index() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "s.json", &diagonal_spec(json!({"kind": "exponential", "alpha": LN_2})));
    let out = dir.path().join("tables");
    let report = dir.path().join("cert.json");
    let status = hkdich(&["verify", &spec, "--csv", out.to_str().unwrap(), "--report", report.to_str().unwrap()]);
    assert_eq!(status.status.code(), Some(0));
    for id in ["hd1", "kd1", "hg2", "kd7"] {
        let mut reader = csv::Reader::from_path(out.join(format!("{id}.csv"))).unwrap();
        assert_eq!(reader.headers().unwrap(), vec!["n", "raw_min", "envelope", "method"]);
        assert_eq!(reader.records().count(), 9, "{id}");
    }
    assert!(report.exists());
}

#[test]
fn exit_codes_follow_selected_conditions() {
    let dir = tempfile::tempdir().unwrap();
    let spec = example_spec("example6", &[], 16).unwrap();
    let path = write_spec(dir.path(), "ex6.json", &serde_json::to_value(&spec).unwrap());
    assert_eq!(hkdich(&["verify", &path]).status.code(), Some(1));
    assert_eq!(hkdich(&["verify", &path, "--conditions", "hg1,kg1"]).status.code(), Some(0));
    assert_eq!(hkdich(&["example", "example2", "--window", "16"]).status.code(), Some(0));
    assert_eq!(hkdich(&["example", "example6", "--window", "16"]).status.code(), Some(1));
}

#[test]
fn malformed_and_invalid_specs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let truncated = dir.path().join("bad.json");
    std::fs::write(&truncated, "{\"dimension\": 2").unwrap();
    let out = hkdich(&["verify", truncated.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed spec"));

    let mut unknown = diagonal_spec(json!({"kind": "exponential", "alpha": 1.0}));
    unknown["extra"] = json!(1);
    assert_eq!(hkdich(&["validate", &write_spec(dir.path(), "u.json", &unknown)]).status.code(), Some(2));

    let mut not_idempotent = diagonal_spec(json!({"kind": "exponential", "alpha": 1.0}));
    not_idempotent["projectors"] = json!({"constant": [2.0, 0.0, 0.0, 0.0]});
    let out = hkdich(&["validate", &write_spec(dir.path(), "p.json", &not_idempotent)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("projectors[0]"));

    assert_eq!(hkdich(&["verify", "/nonexistent/spec.json"]).status.code(), Some(2));
}

#[test]
fn decreasing_rate_table_is_rejected_with_location() {
    let spec: SpecFile =
        serde_json::from_value(diagonal_spec(json!({"kind": "table", "values": [1, 2, 4, 3, 5, 6, 7, 8, 9]}))).unwrap();
    match spec.inputs(None, None, TOL) {
        Err(CliError::Validation(at, hk_dichotomy::Error::NonMonotone { index: 3 })) => assert_eq!(at, "rates.h"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn non_invariant_projectors_are_rejected() {
    let mut value = diagonal_spec(json!({"kind": "exponential", "alpha": LN_2}));
    value["projectors"] = json!({"constant": [1.0, 1.0, 0.0, 0.0]});
    let spec: SpecFile = serde_json::from_value(value).unwrap();
    let err = spec.inputs(None, None, TOL).unwrap_err();
    assert!(err.to_string().contains("not invariant"), "{err}");
}

#[test]
fn example_spec_round_trips_and_digest_is_stable() {
    let spec = example_spec("polynomial-diagonal", &[("alpha".into(), json!(0.5))], 12).unwrap();
    let text = serde_json::to_string(&spec).unwrap();
    let back = SpecFile::parse(&text).unwrap();
    assert_eq!(back, spec);
    assert_eq!(back.digest(), spec.digest());
    let other = example_spec("polynomial-diagonal", &[("alpha".into(), json!(0.75))], 12).unwrap();
    assert_ne!(other.digest(), spec.digest());
    assert!(example_spec("no-such-example", &[], 12).is_err());
}

#[test]
fn series_subcommands_report_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let spec = example_spec("example6", &[], 16).unwrap();
    let path = write_spec(dir.path(), "ex6.json", &serde_json::to_value(&spec).unwrap());
    let out = hkdich(&["barbashin", &path]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["summary"]["verdict"], Verdict::Diverging.as_str());

    let table = dir.path().join("tilde.json");
    std::fs::write(&table, serde_json::to_string(&json!({"values": vec![1.0; 17], "bound": 1.5})).unwrap()).unwrap();
    let arg = format!("table:{}", table.display());
    // sum of 1/(n+1) over 17 indices exceeds 1.5.
    assert_eq!(hkdich(&["datko", &path, "--tilde", &arg]).status.code(), Some(2));
}

#[test]
fn norms_table_lists_every_sample() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "s.json", &diagonal_spec(json!({"kind": "exponential", "alpha": LN_2})));
    let out = hkdich(&["norms", &spec]);
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len() % 9, 0);
    let e1 = rows.iter().find(|r| &r[2] == "1e0" && &r[3] == "0e0").expect("e_1 sample");
    assert_eq!(&e1[4], "1e0");
    // On this diagonal system the stable axis keeps its length in the dichotomy norm.
    assert_eq!(&e1[5], "1e0");
}
