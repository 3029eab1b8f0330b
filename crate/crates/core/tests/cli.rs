use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn failover(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_failover")).args(args).output().unwrap()
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn enumerate_lists_combinations() {
    let o = failover(&["enumerate", "--failures", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 15);
    assert!(lines[0].starts_with("C2+C5\t"));
    assert!(lines[14].starts_with("C20+C22\t"));
}

#[test]
fn run_single_failures_json() {
    let o = failover(&["run", "--failures", "C20,C2", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let rows: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[0]["scenario"], "C20");
    assert_eq!(rows[0]["algorithm"], "exact");
    assert_eq!(rows[0]["programmable_flow_fraction"], 1.0);
    assert_eq!(rows[2]["algorithm"], "nearest");
    assert_eq!(rows[2]["norm_raw_overhead"], 1.0);
}

#[test]
fn run_without_any_feasible_result_exits_one() {
    let o = failover(&["run", "--failures", "C2+C5", "--algorithms", "exact"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.lines().nth(1).unwrap().contains(",exact,infeasible,false,"));
}

#[test]
fn input_errors_exit_two() {
    assert_eq!(failover(&["run", "--failures", "C7"]).status.code(), Some(2));
    assert_eq!(failover(&["run", "--format", "xml"]).status.code(), Some(2));
    assert_eq!(failover(&["run", "--algorithms", "ilp"]).status.code(), Some(2));
    assert_eq!(failover(&["run", "--topology", &fixture("toy.toml")]).status.code(), Some(2));
    assert_eq!(failover(&["validate", "--instance", "/nonexistent", "--solution", "/nonexistent"]).status.code(), Some(2));
    assert_eq!(failover(&["bogus"]).status.code(), Some(2));
}

#[test]
fn instance_solve_validate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let inst: PathBuf = dir.path().join("inst.json");
    let sol: PathBuf = dir.path().join("sol.json");
    let o = failover(&[
        "instance",
        "--topology",
        &fixture("toy.toml"),
        "--placement",
        &fixture("toy_placement.toml"),
        "--flows",
        &fixture("toy_flows.csv"),
        "--failures",
        "C22",
        "--out",
        inst.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    for alg in ["exact", "retroflow"] {
        let o = failover(&["solve", "--instance", inst.to_str().unwrap(), "--algorithm", alg, "--out", sol.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        let o = failover(&["validate", "--instance", inst.to_str().unwrap(), "--solution", sol.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        assert!(stdout(&o).ends_with("feasible: true\n"));
    }

    let o = failover(&["solve", "--instance", inst.to_str().unwrap(), "--algorithm", "nearest", "--out", sol.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let o = failover(&["validate", "--instance", inst.to_str().unwrap(), "--solution", sol.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    // C3 must pull eleven flows with room for five
    assert!(out.contains("controller 3: load 11 > residual 5"), "{out}");
}

#[test]
fn solve_trace_goes_to_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    let o = failover(&["instance", "--failures", "C20", "--out", inst.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let o = failover(&["solve", "--instance", inst.to_str().unwrap(), "--algorithm", "retroflow", "--trace"]);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("iteration 1: pick s"));
    let sol: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(sol["x"], serde_json::json!([true, true]));
}

#[test]
fn protocol_trace_of_bundled_script() {
    let o = failover(&["protocol-trace"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].contains("--lost--> OFFLINE/AWAITING master=none; request role from {C2,C3}"));
    assert!(lines[2].ends_with("rejected by C3; activate legacy routing"));
    assert_eq!(lines[4], "final: mode=Sdn master=3");

    let o = failover(&["protocol-trace", &fixture("failover_fig2.script")]);
    assert_eq!(stdout(&o), out);
}

#[test]
fn synth_is_seeded() {
    let a = failover(&["synth", "--seed", "4"]);
    let b = failover(&["synth", "--seed", "4"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, failover(&["synth", "--seed", "5"]).stdout);
    let g: serde_json::Value = serde_json::from_slice(&failover(&["synth", "--gap"]).stdout).unwrap();
    assert_eq!(g["q_required"].as_u64().unwrap() as usize, g["flow_ids"].as_array().unwrap().len());
}

#[test]
fn inspect_reports_fixture_loads() {
    let o = failover(&["inspect"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("\n13,13,225,"));
    assert!(out.contains("\n2,500,376,124\n"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("totals 2055 vs"));
}
