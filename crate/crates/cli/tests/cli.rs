//! End-to-end tests driving the compiled binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cluster-glasso"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "expected success for {args:?}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen_synth(dir: &Path, name: &str, n: u32, p: u32, seed: u64) -> PathBuf {
    let out = dir.join(name);
    run_ok(&[
        "gen",
        "synth",
        "--n",
        &n.to_string(),
        "--p",
        &p.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        path_str(&out),
    ]);
    out
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen_synth(dir.path(), "a.json", 12, 2, 5);
    let b = gen_synth(dir.path(), "b.json", 12, 2, 5);
    let c = gen_synth(dir.path(), "c.json", 12, 2, 6);
    let bytes_a = std::fs::read(&a).unwrap();
    assert_eq!(bytes_a, std::fs::read(&b).unwrap());
    assert_ne!(bytes_a, std::fs::read(&c).unwrap());
}

#[test]
fn bandwidth_zero_means_no_constraints() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_synth(dir.path(), "inst.json", 10, 0, 1);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(inst).unwrap()).unwrap();
    assert_eq!(v["constraints"].as_array().unwrap().len(), 0);
    assert_eq!(v["n"], 10);
    assert_eq!(v["schema_version"], 1);
}

#[test]
fn instance_covariance_round_trips_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_synth(dir.path(), "inst.json", 9, 2, 42);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(inst).unwrap()).unwrap();
    let got: Vec<f64> =
        v["c_lower"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let spec = cluster_glasso::datagen::SynthSpec::new(9, 2, 42);
    let (pd, _) = cluster_glasso::datagen::gen_synthetic_instance(&spec);
    let want = pd.c.to_lower();
    assert_eq!(got.len(), want.len());
    for (a, b) in got.iter().zip(&want) {
        assert_eq!(a.to_bits(), b.to_bits(), "covariance drifted through JSON");
    }
}

fn identity_instance_json(n: usize) -> String {
    let mut c_lower = Vec::new();
    for i in 0..n {
        for j in 0..=i {
            c_lower.push(if i == j { 1.0 } else { 0.0 });
        }
    }
    serde_json::json!({
        "schema_version": 1,
        "kind": "synthetic",
        "n": n,
        "mu": 1.0,
        "rho": 1.0,
        "lambda": 1.0,
        "seed": 0,
        "c_lower": c_lower,
        "constraints": []
    })
    .to_string()
}

#[test]
fn solve_identity_converges_immediately() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("id.json");
    std::fs::write(&inst, identity_instance_json(6)).unwrap();
    let report = dir.path().join("rep.json");
    run_ok(&["solve", "--instance", path_str(&inst), "--report", path_str(&report)]);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(v["result"]["termination"], "residual_below_eps");
    assert_eq!(v["result"]["iterations"], 0);
    assert!(v["result"]["gap"].as_f64().unwrap() <= 1e-12);
    assert!((v["result"]["p"].as_f64().unwrap() - 6.0).abs() <= 1e-12);
}

#[test]
fn missing_instance_is_an_io_error() {
    let out = run(&["solve", "--instance", "/definitely/not/here.json"]);
    assert_eq!(code(&out), 3);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("not/here.json"), "stderr: {err}");
}

#[test]
fn malformed_instance_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("bad.json");
    std::fs::write(&inst, "{\"schema_version\": 1}").unwrap();
    let out = run(&["solve", "--instance", path_str(&inst)]);
    assert_eq!(code(&out), 3);
    // truncated c_lower caught after parse
    let short = dir.path().join("short.json");
    std::fs::write(
        &short,
        r#"{"schema_version":1,"kind":"x","n":3,"mu":1.0,"rho":1.0,"lambda":1.0,"seed":0,"c_lower":[1.0,0.0],"constraints":[]}"#,
    )
    .unwrap();
    let out = run(&["solve", "--instance", path_str(&short)]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("c_lower"));
}

#[test]
fn exhausted_budget_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_synth(dir.path(), "inst.json", 10, 2, 9);
    let out = run(&["solve", "--instance", path_str(&inst), "--max-iter", "2"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stdout).contains("termination=max_iter"));
}

#[test]
fn paper_mode_judged_by_gap() {
    // machine-precision eps ends in a stall or budget exhaustion, but the
    // tiny gap still counts as success
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_synth(dir.path(), "inst.json", 8, 2, 3);
    let report = dir.path().join("rep.json");
    let out = run(&[
        "solve",
        "--instance",
        path_str(&inst),
        "--paper-mode",
        "--report",
        path_str(&report),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert!(v["result"]["gap"].as_f64().unwrap() <= 1e-6);
    assert_eq!(v["config"]["eps"].as_f64().unwrap(), 1e-16);
    assert_eq!(v["config"]["paper_mode"], true);
}

#[test]
fn compare_small_instance_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_synth(dir.path(), "inst.json", 8, 2, 11);
    let csv = dir.path().join("cmp.csv");
    let out = run_ok(&["compare", "--instance", path_str(&inst), "--out", path_str(&csv)]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("agreement: OK"));
    let text = std::fs::read_to_string(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "solver,iterations,seconds,gap");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("dspg,"));
    assert!(lines[2].starts_with("naive,"));
    for line in &lines[1..] {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 4);
        cells[1].parse::<u64>().unwrap();
        cells[2].parse::<f64>().unwrap();
        assert!(cells[3].parse::<f64>().unwrap() <= 1e-6);
    }
}

#[test]
fn compare_refuses_large_instances() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_synth(dir.path(), "inst.json", 30, 0, 1);
    let out = run(&["compare", "--instance", path_str(&inst)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("refusing"));
}

#[test]
fn trace_has_one_row_per_iterate() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_synth(dir.path(), "inst.json", 10, 2, 21);
    let report = dir.path().join("rep.json");
    let trace = dir.path().join("tr.csv");
    run_ok(&[
        "solve",
        "--instance",
        path_str(&inst),
        "--report",
        path_str(&report),
        "--trace",
        path_str(&trace),
    ]);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let iters = v["result"]["iterations"].as_u64().unwrap() as usize;
    let text = std::fs::read_to_string(&trace).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,g,rnorm,step,alpha,seconds");
    assert_eq!(lines.len(), iters + 2, "header plus one row per iterate");
    assert_eq!(v["trace_path"].as_str().unwrap(), path_str(&trace));

    // the sliding five-value minimum of g never decreases
    let gs: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    let wmin = |k: usize| -> f64 {
        gs[k.saturating_sub(4)..=k].iter().cloned().fold(f64::INFINITY, f64::min)
    };
    for k in 1..gs.len() {
        assert!(
            wmin(k) >= wmin(k - 1) - 1e-12 * (1.0 + wmin(k - 1).abs()),
            "window minimum fell at row {k}"
        );
    }
}

#[test]
fn trace_normalize_maps_onto_unit_scale() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_synth(dir.path(), "inst.json", 8, 0, 2);
    let trace = dir.path().join("tr.csv");
    run_ok(&["solve", "--instance", path_str(&inst), "--trace", path_str(&trace)]);
    let out = run_ok(&["trace", "--input", path_str(&trace), "--normalize"]);
    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,e");
    let es: Vec<f64> =
        lines[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(es[0], 1.0);
    assert_eq!(*es.last().unwrap(), 0.0);
    assert!(es.iter().all(|&e| (0.0..=1.0 + 1e-12).contains(&e)));

    // pass-through mode echoes the rows unchanged
    let echoed = run_ok(&["trace", "--input", path_str(&trace)]);
    assert_eq!(
        String::from_utf8_lossy(&echoed.stdout),
        std::fs::read_to_string(&trace).unwrap()
    );

    // missing input is an io error
    let missing = run(&["trace", "--input", "/no/such/trace.csv"]);
    assert_eq!(code(&missing), 3);
}

#[test]
fn binary_family_round_trips_through_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("table.csv");
    let inst_a = dir.path().join("a.json");
    run_ok(&[
        "gen", "binary", "--rows", "40", "--cols", "12", "--seed", "7",
        "--write-data", path_str(&table), "--out", path_str(&inst_a),
    ]);
    let text = std::fs::read_to_string(&table).unwrap();
    assert_eq!(text.lines().count(), 40);
    assert!(text.lines().all(|l| l.split(',').count() == 12));
    assert!(text.chars().all(|c| matches!(c, '0' | '1' | ',' | '\n')));

    // rebuilding from the written table gives the identical instance
    let inst_b = dir.path().join("b.json");
    run_ok(&["gen", "binary", "--data", path_str(&table), "--seed", "7", "--out", path_str(&inst_b)]);
    assert_eq!(std::fs::read(&inst_a).unwrap(), std::fs::read(&inst_b).unwrap());

    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&inst_a).unwrap()).unwrap();
    assert_eq!(v["n"], 12);
    assert_eq!(v["rho"].as_f64().unwrap(), 0.01);
    assert_eq!(v["lambda"].as_f64().unwrap(), 4.0 * 0.01 / (12.0 * 11.0));
    assert_eq!(v["constraints"].as_array().unwrap().len(), 0);

    // an instance target without a table path cannot work
    let out = run(&["gen", "binary", "--out", path_str(&dir.path().join("c.json"))]);
    assert_eq!(code(&out), 3);
}

#[test]
fn solve_rejects_indefinite_covariance() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("indef.json");
    // C with eigenvalues 3 and -1: the zero start is infeasible
    std::fs::write(
        &inst,
        r#"{"schema_version":1,"kind":"x","n":2,"mu":1.0,"rho":0.1,"lambda":0.1,"seed":0,"c_lower":[1.0,2.0,1.0],"constraints":[]}"#,
    )
    .unwrap();
    let out = run(&["solve", "--instance", path_str(&inst)]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("infeasible"));
}
