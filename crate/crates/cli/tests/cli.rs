use std::process::{Command, Output};

const UNIT: &str = r#"{"kind":"interval","lo":0,"hi":1}"#;
const FINE: &str = r#"{"kind":"interval","lo":0,"hi":1,"resolution":1e-12}"#;

fn tvdw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tvdw"))
        .args(args)
        .env("TVDW_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn eval_json() {
    let o = tvdw(&[
        "eval", "--space", UNIT, "--a", "5", "--b", "3", "--x", "0.37", "--tol", "1e-8",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["error_bound"].as_f64().unwrap() <= 1e-8);
    assert!(v["terms_used"].as_u64().unwrap() > 0);
    assert!(v["value"].as_f64().unwrap() > 0.0);
}

#[test]
fn eval_csv_has_header() {
    let o = tvdw(&[
        "eval", "--space", UNIT, "--a", "2", "--b", "1", "--x", "0,0.5", "--tol", "1e-9",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let mut lines = s.lines();
    assert_eq!(lines.next(), Some("# tvdw v1"));
    assert_eq!(lines.next(), Some("x,value,terms_used,error_bound"));
    assert!(lines.next().unwrap().starts_with("0.0,0.0,"));
    assert!(lines.next().unwrap().starts_with("0.5,0.5,"));
}

#[test]
fn space_file_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let space = dir.path().join("space.json");
    std::fs::write(&space, r#"{"kind":"cantor","level":8}"#).unwrap();
    let out = dir.path().join("h.json");
    let o = tvdw(&[
        "hermeticity",
        "--space",
        space.to_str().unwrap(),
        "--x",
        "0.0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    let h = v["H_estimate"].as_f64().unwrap();
    assert!((h - 0.5).abs() < 0.02, "{h}");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(tvdw(&["eval", "--bogus"]).status.code(), Some(2));
    assert_eq!(tvdw(&["frobnicate"]).status.code(), Some(2));
    let o = tvdw(&[
        "eval",
        "--space",
        r#"{"kind":"interval","lo":1,"hi":0}"#,
        "--a",
        "2",
        "--b",
        "1",
        "--x",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("hi < lo"));
    let o = tvdw(&[
        "eval",
        "--space",
        r#"{"kind":"interval","low":0,"hi":1}"#,
        "--a",
        "2",
        "--b",
        "1",
        "--x",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("low"));
}

#[test]
fn biglip_b2_is_rejected() {
    let o = tvdw(&[
        "verify",
        "--theorem",
        "biglip",
        "--space",
        UNIT,
        "--a",
        "5",
        "--b",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("hypothesis b > 2"));
}

#[test]
fn biglip_verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("s.json");
    let o = tvdw(&[
        "verify",
        "--theorem",
        "biglip",
        "--space",
        FINE,
        "--a",
        "5",
        "--b",
        "3",
        "--points",
        "5",
        "--nmax",
        "6",
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.starts_with("# tvdw v1\nx,n,r,u_n,rho_n,ratio,guaranteed_bound,case_tag,pass\n"));
    assert_eq!(s.lines().count(), 2 + 5 * 6);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(summary).unwrap()).unwrap();
    assert_eq!(v["tested"], 30);
    assert_eq!(v["passed"], 30);
}

#[test]
fn deterministic_output() {
    let args = [
        "verify",
        "--theorem",
        "biglip",
        "--space",
        UNIT,
        "--a",
        "5",
        "--b",
        "3",
        "--points",
        "4",
        "--nmax",
        "5",
    ];
    let a = tvdw(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_tvdw"))
        .args(args)
        .arg("--threads")
        .arg("1")
        .output()
        .unwrap();
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn lip_batch_csv() {
    let space = r#"{"kind":"interval","lo":0,"hi":1,"resolution":1e-12}"#;
    let o = tvdw(&[
        "lip",
        "--space",
        space,
        "--function",
        "builtin:abs",
        "--x",
        "0.3,0.6",
        "--functional",
        "LLip",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.starts_with("# tvdw v1\nx,functional,r,value,diverged,witness\n"));
    for line in s.lines().skip(2) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[1], "LLip_local");
        assert!((cells[3].parse::<f64>().unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(cells[4], "false");
    }
    let missing_r = tvdw(&[
        "lip",
        "--space",
        space,
        "--function",
        "builtin:abs",
        "--x",
        "0.3",
        "--functional",
        "Lip_r_ball",
    ]);
    assert_eq!(missing_r.status.code(), Some(2));
}

#[test]
fn net_and_hierarchy() {
    let o = tvdw(&[
        "net",
        "--space",
        r#"{"kind":"interval","lo":0,"hi":1,"resolution":0.01}"#,
        "--eps",
        "0.25",
        "--verify",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["epsilon"], 0.25);
    assert_eq!(v["points"].as_array().unwrap().len(), 5);
    let o = tvdw(&[
        "hierarchy",
        "--space",
        r#"{"kind":"interval","lo":0,"hi":1,"resolution":1e-3}"#,
        "--a",
        "2.5",
        "--depth",
        "3",
        "--verify",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["levels"].as_array().unwrap().len(), 4);
    let o = tvdw(&[
        "hierarchy",
        "--space",
        r#"{"kind":"lattice_line"}"#,
        "--a",
        "3",
        "--depth",
        "50",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("implicit_lattice"));
}

#[test]
fn synth_report() {
    let space = r#"{"kind":"interval","lo":0,"hi":1,"resolution":1e-40}"#;
    let o = tvdw(&[
        "synth",
        "--space",
        space,
        "--G",
        "(0.2,0.8)",
        "--a",
        "600",
        "--b",
        "17",
        "--verify",
        "--samples",
        "20",
        "--collar",
        "1e-3",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for key in ["F_max_Lip", "IntF_max_LLip", "G_min_growth", "collar"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert!(v["F_max_Lip"].as_f64().unwrap() <= 1.0 + 1e-6);
    let plain = tvdw(&[
        "synth",
        "--space",
        space,
        "--G",
        "(0.2,0.8)",
        "--a",
        "600",
        "--b",
        "17",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&plain)).unwrap();
    assert_eq!(v["alpha"].as_f64().unwrap(), 583.0 / 600.0);
}
