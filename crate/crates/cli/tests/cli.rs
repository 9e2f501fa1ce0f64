use std::fs;
use std::process::Command;

fn nlsgraph() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nlsgraph"))
}

#[test]
fn soliton_prints_constants() {
    let out = nlsgraph().args(["soliton", "4", "1"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("energy -0.0104166666667"), "{text}");
    assert!(text.contains("inverse_width 0.25"), "{text}");
}

#[test]
fn soliton_rejects_supercritical() {
    let out = nlsgraph().args(["soliton", "6", "1"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn graph_check_reports_unfoldability() {
    let dir = tempfile::tempdir().unwrap();
    let b3 = dir.path().join("b3.graph");
    fs::write(&b3, "edge 0 1 1\nedge 0 1 1\nedge 0 1 1\nedge 0 - inf\nedge 1 - inf\n").unwrap();
    let out = nlsgraph().args(["graph", "check"]).arg(&b3).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success());
    assert!(text.contains("euler_unfoldable true"), "{text}");

    let b2 = dir.path().join("b2.graph");
    fs::write(&b2, "edge 0 1 1\nedge 0 1 1\nedge 0 - inf\nedge 1 - inf\n").unwrap();
    let out = nlsgraph().args(["graph", "check"]).arg(&b2).output().unwrap();
    assert!(String::from_utf8(out.stdout).unwrap().contains("euler_unfoldable false"));

    let bad = dir.path().join("bad.graph");
    fs::write(&bad, "edge 0 1 -2\n").unwrap();
    assert!(!nlsgraph().args(["graph", "check"]).arg(&bad).status().unwrap().success());
}

#[test]
fn run_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("b2.graph"), "edge 0 1 1\nedge 0 1 1\nedge 0 - inf\nedge 1 - inf\n").unwrap();
    let scenario = dir.path().join("reduce.toml");
    fs::write(
        &scenario,
        r#"
graph_file = "b2.graph"
p = 4.0
mu = 1.0
h = 0.1
truncation = 10.0
init = "random"
pipeline = ["bridge_reduce", "unfold", "compare_soliton"]
"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = nlsgraph()
        .arg("run")
        .arg(&scenario)
        .args(["--seed", "7", "--L", "12"])
        .arg("--out-dir")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["scenario"]["seed"], 7);
    assert_eq!(report["scenario"]["truncation"], 12.0);
    let trace = report["trace"].as_array().unwrap();
    assert_eq!(trace.len(), 2);
    let e0 = trace[0]["energy_before"].as_f64().unwrap();
    let e1 = trace[1]["energy_after"].as_f64().unwrap();
    assert!(e1 <= e0);
    assert!(out_dir.join("field.csv").exists());
    assert!(!out_dir.join("trace.csv").exists());
}

#[test]
fn run_fails_with_stage_context() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.toml");
    fs::write(
        &scenario,
        "graph = \"bridge 2 1 1\"\np = 4.0\nmu = 1.0\nh = 0.1\ntruncation = 10.0\npipeline = [\"unfold\"]\n",
    )
    .unwrap();
    let out = nlsgraph().arg("run").arg(&scenario).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("unfold"));
}
