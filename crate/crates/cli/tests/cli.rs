use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn oscillab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oscillab")).args(args).output().expect("spawn oscillab")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn last_stderr_json(o: &Output) -> Value {
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    let line = err.lines().last().expect("stderr is empty");
    serde_json::from_str(line).unwrap()
}

fn rows(csv: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::ReaderBuilder::new().from_reader(csv.as_bytes());
    let head = r.headers().unwrap().iter().map(String::from).collect();
    let body = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (head, body)
}

fn column(head: &[String], name: &str) -> usize {
    head.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn plateau_parity_holds_through_twelve() {
    let o = oscillab(&["verify-plateau", "--k", "2", "--j0", "1", "--n-max", "12"]);
    assert_eq!(o.status.code(), Some(0));
    let (head, body) = rows(&stdout(&o));
    assert_eq!(body.len(), 12);
    let parity = column(&head, "parity");
    let pass = column(&head, "pass");
    assert!(body.iter().all(|r| r[parity] == "true" && r[pass] == "true"));
    assert_eq!(body[2][column(&head, "Q_n")], "315");
    assert_eq!(last_stderr_json(&o)["status"], "PASS");
}

#[test]
fn zero_frequency_is_exactly_zero() {
    let o = oscillab(&["compute-m", "--phase", "gevrey:s=2", "--lambda", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let (head, body) = rows(&stdout(&o));
    assert_eq!(body[0][column(&head, "value")], "0+0i");
    assert_eq!(body[0][column(&head, "strategy")], "Zero");
}

#[test]
fn direct_and_substituted_agree() {
    let get = |method: &str| {
        let o = oscillab(&["compute-m", "--phase", "gevrey:s=2", "--lambda", "100", "--method", method]);
        assert_eq!(o.status.code(), Some(0));
        let (head, body) = rows(&stdout(&o));
        let re: f64 = body[0][column(&head, "re")].parse().unwrap();
        let im: f64 = body[0][column(&head, "im")].parse().unwrap();
        (re, im)
    };
    let (a, b) = (get("direct"), get("substituted"));
    assert!((a.0 - b.0).abs() < 1e-6 && (a.1 - b.1).abs() < 1e-6, "{a:?} vs {b:?}");
}

#[test]
fn malformed_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{not json").unwrap();
    let o = oscillab(&["--config", path.to_str().unwrap(), "compute-m"]);
    assert_eq!(o.status.code(), Some(2));
    let d = last_stderr_json(&o);
    assert_eq!(d["status"], "error");
    assert_eq!(d["kind"], "ConfigError");
}

#[test]
fn config_rejects_unknown_keys_and_wrong_command() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = dir.path().join("unknown.json");
    fs::write(&unknown, r#"{"phase":"gevrey:s=2","lambd":[1]}"#).unwrap();
    assert_eq!(oscillab(&["--config", unknown.to_str().unwrap(), "compute-m"]).status.code(), Some(2));
    let wrong = dir.path().join("wrong.json");
    fs::write(&wrong, r#"{"command":"vdc-check"}"#).unwrap();
    assert_eq!(oscillab(&["--config", wrong.to_str().unwrap(), "compute-m"]).status.code(), Some(2));
}

#[test]
fn config_file_supplies_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    fs::write(&path, r#"{"command":"compute-m","phase":"gevrey:s=2","lambda":[0,5],"rel-tol":1e-8}"#).unwrap();
    let o = oscillab(&["--config", path.to_str().unwrap(), "compute-m"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(rows(&stdout(&o)).1.len(), 2);
}

#[test]
fn bad_input_exits_two_and_usage_errors_too() {
    let o = oscillab(&["compute-m", "--phase", "bogus", "--lambda", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(last_stderr_json(&o)["kind"], "ConfigError");
    assert_eq!(oscillab(&["compute-m", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(oscillab(&["verify-plateau", "--k", "2", "--j0", "0"]).status.code(), Some(2));
}

#[test]
fn compute_failure_exits_one() {
    let o = oscillab(&["carleman", "--family", "gevrey:s=2", "--op", "legendre", "--y", "1000"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(last_stderr_json(&o)["kind"], "BudgetExhausted");
}

#[test]
fn failed_verdict_exits_one() {
    let o = oscillab(&["verify-growth", "--phase", "gevrey:s=2", "--envelope", "log", "--lambda-ladder", "10,3.1622776601683795,11"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(last_stderr_json(&o)["status"], "FAIL");
}

#[test]
fn growth_outputs_are_deterministic_and_svg_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let csv = dir.path().join(format!("{tag}.csv"));
        let svg = dir.path().join(format!("{tag}.svg"));
        let o = oscillab(&[
            "verify-growth",
            "--phase",
            "gevrey:s=2",
            "--envelope",
            "logpow:p=0.5",
            "--lambda-ladder",
            "10,3.1622776601683795,11",
            "--out",
            csv.to_str().unwrap(),
            "--svg",
            svg.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        (fs::read(&csv).unwrap(), svg)
    };
    let (a, svg) = run("a");
    let (b, _) = run("b");
    assert_eq!(a, b);
    let text = fs::read_to_string(Path::new(&svg)).unwrap();
    assert!(text.starts_with("<svg") && text.contains("<polyline"));
}

#[test]
fn plateau_growth_in_lower_bound_mode() {
    let o = oscillab(&[
        "verify-growth",
        "--phase",
        "plateau:k=2,j0=1",
        "--envelope",
        "log-over-iterlog:k=2",
        "--plateau-n",
        "14",
        "--plateau-n-min",
        "3",
        "--mode",
        "lower-bound",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let (head, body) = rows(&stdout(&o));
    assert_eq!(body.len(), 12);
    assert!(body.iter().all(|r| r[column(&head, "measurement")] == "certified"));
}

#[test]
fn flatbound_and_derivatives_report() {
    let o = oscillab(&["verify-derivatives", "--phase", "gevrey:s=2", "--family", "gevrey:s=2"]);
    assert_eq!(o.status.code(), Some(0));
    let k = last_stderr_json(&o)["k_hat"].as_f64().unwrap();
    assert!((k - 1.4257).abs() < 1e-3, "{k}");

    let o = oscillab(&["verify-flatbound", "--phase", "gevrey:s=2", "--family", "gevrey:s=2", "--grid", "0.02,0.5,16"]);
    assert_eq!(o.status.code(), Some(0));
    let (head, body) = rows(&stdout(&o));
    assert_eq!(body.len(), 16);
    assert!(head.contains(&"ln_bang".to_string()));
}

#[test]
fn carleman_ops_emit_json() {
    let o = oscillab(&["carleman", "--family", "gevrey:s=2", "--op", "inverse-tail", "--r", "0.01"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["result"]["index"], 100);
    let o = oscillab(&["carleman", "--family", "refined:k=2,s=2", "--op", "quasianalytic"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["result"]["quasianalytic"], "No");
}

#[test]
fn vdc_and_sweep_pass_on_small_inputs() {
    let o = oscillab(&["vdc-check"]);
    assert_eq!(o.status.code(), Some(0));
    let c = last_stderr_json(&o)["fitted_c"].as_f64().unwrap();
    assert!(c > 0.0 && c <= 10.0);
    let o = oscillab(&["poly-sweep", "--d-max", "6", "--trials", "10"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(rows(&stdout(&o)).1.len(), 5);
}

#[test]
fn list_phases_is_parseable() {
    let o = oscillab(&["list-phases"]);
    assert_eq!(o.status.code(), Some(0));
    let (head, body) = rows(&stdout(&o));
    assert_eq!(head[0], "name");
    assert!(body.len() >= 7);
}
