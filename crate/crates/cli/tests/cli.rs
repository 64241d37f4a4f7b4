use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use spectral_core::basis::Tensor;
use spectral_core::recursion::Correlator;
use spectral_core::Error;
use spectral_rec::output::correlator_json;
use spectral_rec::CliError;

const AIRY: &str = r#"[curve]
name = "airy"
x = "z^2"
y = "z"
mode = "exact"

[compute]
g_max = 2
n_max = 3
wkb_order = 4
seed = 7
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spectral-rec"))
        .args(args)
        .current_dir(dir)
        .env_remove("SPECTRAL_REC_THREADS")
        .output()
        .unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn entry(doc: &Value, g: u64, n: u64) -> &Value {
    doc["content"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["g"] == g && e["n"] == n)
        .unwrap()
}

#[test]
fn compute_writes_documents() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "airy.toml", AIRY);
    let out = run(&["compute", "airy.toml"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let base = dir.path().join("out/airy");
    let w = read_json(&base.join("w.json"));
    assert_eq!(
        entry(&w, 1, 1),
        &json!({"g": 1, "n": 1, "terms": [{"slots": [{"point": "0", "order": 4}], "coeff": "-1/16"}]})
    );
    let wkb = read_json(&base.join("wkb.json"));
    let s2 = &wkb["content"]["terms"][0];
    assert_eq!(s2["m"], 2);
    assert_eq!(s2["poles"], json!([{"point": "0", "order": 3}]));
    assert_eq!(s2["rational"], "(5/48)/(z^3)");
    let f = read_json(&base.join("f.json"));
    assert_eq!(
        entry(&f, 1, 1),
        &json!({"g": 1, "n": 1, "terms": [{"slots": [{"point": "0", "order": 3}], "coeff": "1/48"}]})
    );
    // Key order in the serialized entry follows the schema.
    let text = std::fs::read_to_string(base.join("w.json")).unwrap();
    assert!(text.find("\"point\"") < text.find("\"order\""));
}

#[test]
fn h_model_flag_halves_y() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "airy.toml", AIRY);
    let out = run(
        &["--h-model", "compute", "airy.toml", "--out", "h"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let w = read_json(&dir.path().join("h/w.json"));
    assert_eq!(entry(&w, 1, 1)["terms"][0]["coeff"], "-1/8");
    assert_eq!(
        entry(&w, 0, 3)["terms"],
        json!([{"slots": [{"point": "0", "order": 2}, {"point": "0", "order": 2}, {"point": "0", "order": 2}], "coeff": "-1"}])
    );
    assert_eq!(w["curve"]["y"], "1/2*z");
}

#[test]
fn invalid_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let irrational = AIRY.replace("\"z^2\"", "\"z/(z^2 - 2)\"");
    write_config(dir.path(), "irr.toml", &irrational);
    let out = run(&["compute", "irr.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unsupported curve"));

    write_config(
        dir.path(),
        "bad.toml",
        &AIRY.replace("\"z^2\"", "\"1/(1-z^2\""),
    );
    let out = run(&["verify", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("expected ')' at offset 8"));

    let out = run(&["compute", "missing.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    write_config(dir.path(), "airy.toml", AIRY);
    let out = Command::new(env!("CARGO_BIN_EXE_spectral-rec"))
        .args(["compute", "airy.toml"])
        .current_dir(dir.path())
        .env("SPECTRAL_REC_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["wkb", "airy.toml", "--order", "1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn error_classes_map_to_exit_codes() {
    assert_eq!(
        CliError::from_core(Error::UnsupportedCurve("x".into())).exit_code(),
        2
    );
    assert_eq!(
        CliError::from_core(Error::InternalConsistency("x".into())).exit_code(),
        3
    );
    assert_eq!(
        CliError::from_core(Error::InsufficientOrder { tried: 8 }).exit_code(),
        3
    );
}

#[test]
fn verify_all_passes_on_airy() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "airy.toml", AIRY);
    let out = run(&["verify", "airy.toml", "--suite", "all"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["table"], "computed");
    let names: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"W(1,1) closed form"));
    assert!(names.contains(&"F(1,2) differential recursion"));
    assert!(names.iter().any(|n| n.starts_with("ODE oracle")));
}

#[test]
fn corrupted_table_fails_with_named_invariant() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "airy.toml", AIRY);
    assert_eq!(
        run(&["compute", "airy.toml"], dir.path()).status.code(),
        Some(0)
    );
    let path = dir.path().join("out/airy/w.json");
    let mut w = read_json(&path);
    let e = w["content"]
        .as_array_mut()
        .unwrap()
        .iter_mut()
        .find(|e| e["g"] == 1 && e["n"] == 2)
        .unwrap();
    e["terms"][0]["coeff"] = json!("12345");
    std::fs::write(&path, serde_json::to_string_pretty(&w).unwrap()).unwrap();

    let out = run(
        &["verify", "airy.toml", "--suite", "correlators"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let failed: Vec<&Value> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["status"] == "fail")
        .collect();
    let named = failed
        .iter()
        .find(|c| c["name"] == "W(1,2) symmetry, poles and balanced average")
        .unwrap();
    assert!(named["detail"]
        .as_str()
        .unwrap()
        .starts_with("invariant violation in W(1,2) slot"));
    assert!(failed
        .iter()
        .any(|c| c["name"] == "table file content hash"));
    assert!(failed
        .iter()
        .any(|c| c["name"] == "table file matches recomputation"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL W(1,2)"));
}

#[test]
fn wkb_suite_reuses_a_valid_table() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "airy.toml", AIRY);
    let out = run(&["verify", "airy.toml", "--suite", "wkb"], dir.path());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["table"], "computed");

    assert_eq!(
        run(&["compute", "airy.toml"], dir.path()).status.code(),
        Some(0)
    );
    let out = run(&["verify", "airy.toml", "--suite", "wkb"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["table"], "cache");

    // A stale or edited table is not trusted.
    let path = dir.path().join("out/airy/w.json");
    let text = std::fs::read_to_string(&path)
        .unwrap()
        .replacen("\"-1/16\"", "\"-1/15\"", 1);
    std::fs::write(&path, text).unwrap();
    let out = run(&["verify", "airy.toml", "--suite", "wkb"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["table"], "computed");

    write_config(
        dir.path(),
        "airy.toml",
        &AIRY.replace("g_max = 2", "g_max = 1"),
    );
    assert_eq!(
        run(&["compute", "airy.toml"], dir.path()).status.code(),
        Some(0)
    );
    let out = run(&["verify", "airy.toml", "--suite", "wkb"], dir.path());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["table"], "cache");
}

#[test]
fn wkb_command_prints_requested_order() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "airy.toml", AIRY);
    let out = run(&["wkb", "airy.toml", "--order", "6"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let terms = doc["content"]["terms"].as_array().unwrap();
    assert_eq!(terms.len(), 5);
    assert_eq!(terms[1]["rational"], "(5/64)/(z^6)");
    for t in terms {
        let m = t["m"].as_u64().unwrap();
        assert_eq!(t["poles"][0]["order"].as_u64().unwrap(), 3 * m - 3);
    }
    assert_eq!(read_json(&dir.path().join("out/airy/wkb.json")), doc);
}

#[test]
fn series_mode_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cubic = AIRY
        .replace("\"airy\"", "\"cubic\"")
        .replace("\"z^2\"", "\"z^3 - 3*z\"")
        .replace("y = \"z\"", "y = \"z^2 - 1\"")
        .replace("\"exact\"", "\"series\"")
        .replace("g_max = 2", "g_max = 1")
        .replace("n_max = 3", "n_max = 1")
        .replace("wkb_order = 4", "wkb_order = 2");
    write_config(dir.path(), "cubic.toml", &cubic);
    let out = run(&["verify", "cubic.toml", "--suite", "all"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    // Three sheets: no second-order quantum curve to test against.
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let oracle = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "ODE oracle")
        .unwrap();
    assert_eq!(oracle["status"], "skip");
}

#[test]
fn empty_correlator_serializes_with_no_terms() {
    let w = Correlator {
        g: 2,
        n: 1,
        tensor: Tensor::new(),
    };
    let v = serde_json::to_value(correlator_json(&w, &[])).unwrap();
    assert_eq!(v, json!({"g": 2, "n": 1, "terms": []}));
}
