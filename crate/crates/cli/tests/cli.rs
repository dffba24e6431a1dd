use std::fs;
use std::path::Path;

use vnc_cli::run_from;

fn vnc(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["vnc"];
    argv.extend_from_slice(args);
    let code = run_from(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn net(name: &str) -> String {
    format!("{}/../petri/nets/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn config_file_run_writes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ncp.cfg");
    fs::write(&cfg, "scenario = ncp\nseed = 3\n").unwrap();
    let out = dir.path().join("out");
    let (code, stdout, err) = vnc(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    for f in ["lvt_trace.csv", "load.csv", "summary.json"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    assert!(stdout.contains("speedup"));
    let s = summary(&out);
    assert_eq!(s["seed"], 3);
    assert!(s["measured_speedup"].as_f64().unwrap() > 1.0);
}

#[test]
fn missing_config_is_a_config_error() {
    let (code, _, err) = vnc(&["run", "--config", "/definitely/not/here.cfg"]);
    assert_eq!(code, 2);
    assert!(err.contains("not/here"));
}

#[test]
fn bad_flag_is_a_usage_error() {
    assert_eq!(vnc(&["run", "--frobnicate"]).0, 1);
    assert_eq!(vnc(&["nonsense"]).0, 1);
    assert_eq!(vnc(&["run", "--set", "novalue"]).0, 1);
    assert_eq!(vnc(&["--help"]).0, 0);
}

#[test]
fn unknown_scenario_and_bad_values() {
    assert_eq!(vnc(&["run", "--scenario", "nope"]).0, 2);
    assert_eq!(vnc(&["run"]).0, 2);
    assert_eq!(vnc(&["run", "--scenario", "ncp", "--set", "duration=-5"]).0, 2);
}

#[test]
fn sequential_mode_sends_no_virtual_messages() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = vnc(&["run", "--scenario", "ncp", "--mode", "sequential", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let s = summary(dir.path());
    assert_eq!(s["class_totals"]["virtual"], 0);
    assert!(s["measured_speedup"].is_null());
}

#[test]
fn list_names_every_scenario() {
    let (code, out, _) = vnc(&["list"]);
    assert_eq!(code, 0);
    let names: Vec<&str> = out.lines().collect();
    assert_eq!(names, ["mgmt", "ncp", "slp_chain"]);
}

#[test]
fn analyze_table_at_the_constraint_point() {
    let (code, out, _) = vnc(&["analyze"]);
    assert_eq!(code, 0);
    let pr = out.lines().find(|l| l.starts_with("PR ")).unwrap();
    assert_eq!(pr.split_whitespace().nth(1), Some("4.000000"));
}

#[test]
fn one_processor_has_no_parallel_gain() {
    let (code, out, _) = vnc(&["analyze", "--json", "--set", "p_procs=1", "--set", "k_stages=4"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["s_parallel"].as_f64(), Some(1.0));
}

#[test]
fn analyze_rejects_unknown_keys() {
    assert_eq!(vnc(&["analyze", "--set", "bogus=1"]).0, 2);
    assert_eq!(vnc(&["analyze", "--set", "tau_task=-1"]).0, 2);
}

#[test]
fn analytic_json_against_itself_has_zero_deltas() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let (code, _, _) = vnc(&["analyze", "--json", "--set", "sigma2=0", "--out", a.to_str().unwrap()]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&a).unwrap()).unwrap();
    let m = dir.path().join("m.json");
    fs::write(
        &m,
        serde_json::json!({"measured_speedup": v["eta"], "measured_beta": v["beta_count"]}).to_string(),
    )
    .unwrap();
    let (code, out, err) = vnc(&["compare", "--measured", m.to_str().unwrap(), "--analytic", a.to_str().unwrap(), "--tolerance", "0"]);
    assert_eq!(code, 0, "{err}");
    for l in out.lines().skip(1) {
        assert_eq!(l.split_whitespace().last(), Some("0.000000"), "{l}");
    }
}

#[test]
fn ncp_run_tracks_the_analytic_speedup() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = vnc(&["run", "--scenario", "ncp", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    let a = dir.path().join("analytic.cfg");
    fs::write(&a, "sigma2 = 0\n").unwrap();
    let m = dir.path().join("summary.json");
    let args = ["compare", "--measured", m.to_str().unwrap(), "--analytic", a.to_str().unwrap()];
    let (code, out, _) = vnc(&[&args[..], &["--tolerance", "0.3"]].concat());
    assert_eq!(code, 0, "{out}");
    let (code, _, err) = vnc(&[&args[..], &["--tolerance", "0.001"]].concat());
    assert_eq!(code, 3);
    assert!(err.contains("exceeds tolerance"));
}

#[test]
fn event_count_mismatch_warns() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.cfg");
    fs::write(&a, "events = 10\n").unwrap();
    let m = dir.path().join("m.json");
    fs::write(&m, r#"{"measured_speedup": 3.0, "measured_beta": null, "events": 12}"#).unwrap();
    let (code, out, _) = vnc(&["compare", "--measured", m.to_str().unwrap(), "--analytic", a.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("event counts differ"));
    assert!(out.contains("beta has no value"));
}

#[test]
fn petri_reports_distances_and_tolerance() {
    let (code, out, err) = vnc(&["petri", &net("synchex.net"), "--t1", "a", "--t2", "b", "--fire", "a"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.lines().any(|l| l.starts_with("GSV ")));
    let last = out.lines().last().unwrap();
    let cells: Vec<&str> = last.split(',').collect();
    assert_eq!(cells[1], "0.7000");
    assert_eq!(cells[3], "0.3000");
    let (_, out, _) = vnc(&["petri", &net("cycle4.net"), "--t1", "a,b", "--t2", "c,d"]);
    assert!(out.contains("sigma(a,b; c,d) 2"), "{out}");
}

#[test]
fn petri_input_errors() {
    assert_eq!(vnc(&["petri", "/no/such.net"]).0, 2);
    assert_eq!(vnc(&["petri", &net("synchex.net"), "--t1", "zz", "--t2", "a"]).0, 2);
    assert_eq!(vnc(&["petri", &net("synchex.net"), "--t1", "a"]).0, 1);
}
