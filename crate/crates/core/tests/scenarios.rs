use nlsgraph::scenario::{run_scenario, Scenario, StageReport};

fn scenario(graph: &str, h: f64, truncation: f64, pipeline: &str, init: &str) -> Scenario {
    Scenario::from_toml_str(&format!(
        "graph = \"{graph}\"\np = 4.0\nmu = 1.0\nh = {h}\ntruncation = {truncation}\n\
         init = \"{init}\"\npipeline = [{pipeline}]\n"
    ))
    .unwrap()
}

fn compare(stages: &[StageReport]) -> (f64, f64) {
    match stages.last() {
        Some(StageReport::CompareSoliton { gap, delta_h, .. }) => (*gap, *delta_h),
        other => panic!("expected compare_soliton, got {other:?}"),
    }
}

#[test]
fn bridge_minimum_sits_just_above_the_soliton() {
    let s = scenario("bridge 2 1 1", 0.05, 80.0, "\"minimize\", \"compare_soliton\"", "vertex_bump");
    let out = run_scenario(&s).unwrap();
    let (gap, delta_h) = compare(&out.report.stages);
    assert!(gap > -delta_h && gap < 5e-3, "gap {gap}");
    assert!((out.report.final_energy.unwrap().mass - 1.0).abs() < 1e-10);
    assert!(out.report.escape_trend.is_some());
}

#[test]
fn pendant_graph_beats_the_soliton() {
    let s = scenario("star2plus1 1", 0.05, 40.0, "\"minimize\", \"compare_soliton\"", "vertex_bump");
    let out = run_scenario(&s).unwrap();
    let (gap, delta_h) = compare(&out.report.stages);
    assert!(gap < -3.0 * delta_h, "gap {gap}, delta_h {delta_h}");
}

#[test]
fn even_bridge_haircut_pipeline() {
    for n in [2, 4] {
        let lengths = vec!["1"; n].join(" ");
        let s = scenario(
            &format!("bridge {n} {lengths}"),
            0.1,
            10.0,
            "\"bridge_reduce\", \"unfold\", \"compare_soliton\"",
            "random",
        );
        let out = run_scenario(&s).unwrap();
        let trace = &out.report.trace;
        assert!(trace.is_consistent(1e-12));
        let (gap, delta_h) = compare(&out.report.stages);
        let e_graph = trace.steps[0].energy_before;
        let e_line = trace.steps[1].energy_after;
        assert!(e_line <= e_graph);
        assert!(gap > -delta_h);
    }
}

#[test]
fn escaping_sweep_stage() {
    let s = scenario("star 3", 0.05, 60.0, "\"escaping_sweep\"", "escaping");
    let out = run_scenario(&s).unwrap();
    let StageReport::EscapingSweep { rows } = &out.report.stages[0] else {
        panic!("expected sweep");
    };
    assert_eq!(rows.len(), 4);
    assert!(rows.windows(2).all(|w| w[1].gap < w[0].gap && w[1].gap > 0.0));
    assert!(rows.iter().all(|r| (r.mass - 1.0).abs() < 1e-10));
}

#[test]
fn outputs_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario("halfline", 0.1, 30.0, "\"minimize\"", "vertex_bump");
    let out = run_scenario(&s).unwrap();
    assert!(out.report.escape_trend.is_some());
    out.write_to(dir.path()).unwrap();
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("iteration,energy,mass,max_escape_fraction\n"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["stages"][0]["stage"], "minimize");
}
