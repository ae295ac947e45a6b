//! End-to-end runs of the `kdist` binary: output, exit codes and determinism.

use std::io::Write;
use std::process::{Command, Output, Stdio};

fn kdist(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_kdist"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    if let Some(text) = stdin {
        child.stdin.take().expect("stdin").write_all(text.as_bytes()).expect("write stdin");
    }
    drop(child.stdin.take());
    child.wait_with_output().expect("binary exits")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const CYCLE: &str = "candidates: a,b,c\n1/3: a>b>c\n1/3: b>c>a\n1/3: c>a>b\n";
const MAJORITY: &str = "candidates: x,y\n3/5: x>y\n2/5: y>x\n";

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("json output")
}

#[test]
fn minority_candidate_has_distortion_four() {
    let o = kdist(&["distortion", "-", "--candidate", "y"], Some(MAJORITY));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(json(&o)["value"], "4");
}

#[test]
fn stats_reports_the_candidates() {
    let o = kdist(&["stats", "-"], Some(CYCLE));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["m"], 3);
    assert_eq!(v["candidates"], serde_json::json!(["a", "b", "c"]));
}

#[test]
fn malformed_input_exits_one() {
    let o = kdist(&["stats", "-"], Some("candidates: a,b\n1: a>b\n1: b>a\n"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("weight sum"));
}

#[test]
fn unknown_subcommand_exits_one() {
    assert_eq!(kdist(&["frobnicate"], None).status.code(), Some(1));
}

#[test]
fn unblanketed_parameters_are_validated() {
    let o = kdist(&["run", "-", "--rule", "unblanketed", "--alpha", "0.6", "--beta", "0.7"], Some(CYCLE));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("requires α ≥ β > 1/2"), "{}", stderr(&o));
}

#[test]
fn copeland_run_is_certified() {
    let o = kdist(&["run", "-", "--rule", "copeland", "--format", "table"], Some(CYCLE));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("certified") && l.ends_with("true")), "{text}");
}

#[test]
fn sweep_rejects_empty_and_multiple_ranges() {
    let empty = kdist(&["sweep", "-", "--measure", "kernel", "--theta", "0.6:0.5:0.1"], Some(CYCLE));
    assert_eq!(empty.status.code(), Some(1));
    assert!(stderr(&empty).contains("empty range"));

    let many = kdist(&["sweep", "-", "--measure", "slv", "--theta", "0.55,0.6", "--k", "1,2"], Some(CYCLE));
    assert_eq!(many.status.code(), Some(1));
    assert!(stderr(&many).contains("exactly one ranged flag"));

    let none = kdist(&["sweep", "-", "--measure", "kernel"], Some(CYCLE));
    assert_eq!(none.status.code(), Some(1));
}

#[test]
fn sweep_emits_one_csv_row_per_value() {
    let o = kdist(&["sweep", "-", "--measure", "kernel", "--theta", "0.55:0.75:0.1"], Some(CYCLE));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "theta,kernel_size,kernel");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("3/4,3,"));
}

#[test]
fn certify_echoes_the_method_name() {
    let o = kdist(&["certify", "-", "--method", "local", "--jstar", "a", "--istar", "b"], Some(CYCLE));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["method"], "local");
    assert_eq!(v["parameters"]["method"], "local");
}

#[test]
fn verify_paper_parameters_pass() {
    let o = kdist(&["verify-paper", "--instance", "theorem6-params"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(json(&o)["passed"], true);
}

#[test]
fn verify_paper_lower_bound_instance_passes() {
    let o = kdist(&["verify-paper", "--instance", "lb5"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn output_is_deterministic() {
    let args = ["lottery", "lb5:2", "--k", "2", "--seed", "7"];
    let a = kdist(&args, None);
    let b = kdist(&args, None);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
}
