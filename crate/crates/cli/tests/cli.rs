// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use subgraph_recovery::{AtomicService, CompositeGraph, Concept, QoS, RecoveryPlan, RegistryFile, Summary};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subrecover")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_writes_collections_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["gen", "--seed", "42", "--graphs", "1000", "--min-order", "2", "--max-order", "6", "-o", s(&a)]);
    let graphs: Vec<CompositeGraph> = serde_json::from_str(&fs::read_to_string(a.join("collection.json")).unwrap()).unwrap();
    assert_eq!(graphs.len(), 1000);
    assert!(graphs.iter().all(|g| (2..=6).contains(&g.order())));
    ok(&["gen", "--seed", "42", "--graphs", "1000", "--min-order", "2", "--max-order", "6", "-o", s(&b)]);
    for f in ["registry.json", "collection.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["params"]["n_graphs"], 1000);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);

    let empty = dir.path().join("empty");
    ok(&["gen", "--graphs", "0", "-o", s(&empty)]);
    assert_eq!(fs::read_to_string(empty.join("collection.json")).unwrap().trim(), "[]");
}

fn q(t: f64, c: f64) -> QoS {
    QoS::new(t, c).unwrap()
}

fn write_world(dir: &Path, services: Vec<AtomicService>, graphs: &[CompositeGraph]) -> (String, String) {
    let registry = dir.join("registry.json");
    let collection = dir.join("collection.json");
    let file = RegistryFile { concepts: ["x", "y"].map(Concept::root).to_vec(), services };
    fs::write(&registry, serde_json::to_string(&file).unwrap()).unwrap();
    fs::write(&collection, serde_json::to_string(graphs).unwrap()).unwrap();
    (registry.to_str().unwrap().into(), collection.to_str().unwrap().into())
}

#[test]
fn plan_counts_entries_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let g = CompositeGraph::new("g").with_node("n", "a").with_inputs(["x"]).with_outputs(["y"]);
    let a = AtomicService::new("a", ["x"], ["y"], q(10.0, 1.0));

    let (reg, col) = write_world(dir.path(), vec![a.clone()], std::slice::from_ref(&g));
    let out = dir.path().join("lonely");
    assert_eq!(ok(&["plan", "--registry", &reg, "--collection", &col, "-o", s(&out)]), "g\t0\n");

    let twin = AtomicService { id: "a2".into(), ..a.clone() };
    let (reg, col) = write_world(dir.path(), vec![a, twin], &[g]);
    let out = dir.path().join("twin");
    assert_eq!(ok(&["plan", "--registry", &reg, "--collection", &col, "-o", s(&out)]), "g\t1\n");
    let text = fs::read_to_string(out.join("plans.json")).unwrap();
    let plans: Vec<RecoveryPlan> = serde_json::from_str(&text).unwrap();
    assert_eq!(plans[0].entry_count(), 1);
    assert_eq!(serde_json::to_string_pretty(&plans).unwrap() + "\n", text);

    assert_eq!(code(&["plan", "--registry", "/nonexistent.json", "--collection", &col]), 1);
    fs::write(dir.path().join("bad.json"), "{").unwrap();
    assert_eq!(code(&["plan", "--registry", s(&dir.path().join("bad.json")), "--collection", &col]), 1);
}

const SMALL: [&str; 6] = ["--graphs", "10", "--services", "40", "--concepts", "30"];

fn simulate(out: &Path, extra: &[&str]) -> String {
    let mut args = vec!["simulate", "-o", s(out)];
    args.extend(SMALL);
    args.extend(extra);
    ok(&args)
}

#[test]
fn simulate_reports_every_trial_and_stratum() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let stdout = simulate(&out, &["--seed", "7", "--trials", "100", "--strategies", "atomic,composite", "--jobs", "2"]);
    assert!(stdout.contains("atomic") && stdout.contains("composite"));
    let csv = fs::read_to_string(out.join("report.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("strategy,trial,order,events,recovered,probability"));
    let mut strata = std::collections::BTreeMap::new();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        *strata.entry((f[0].to_string(), f[2].to_string())).or_insert(0) += 1;
    }
    assert_eq!(strata.len(), 2 * 6);
    assert!(strata.values().all(|&n| n == 100));

    let schema: serde_json::Value =
        serde_json::from_str(include_str!("../schemas/summary.schema.json")).unwrap();
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    assert!(validator.is_valid(&summary));
    let mut broken = summary.clone();
    broken["strategies"][0]["mean"] = serde_json::json!(1.5);
    assert!(!validator.is_valid(&broken));
}

#[test]
fn single_trial_mean_is_that_trial() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("one");
    simulate(&out, &["--trials", "1", "--strategies", "composite"]);
    let summary: Summary = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.strategies.len(), 1);
    let csv = fs::read_to_string(out.join("report.csv")).unwrap();
    let all = csv.lines().find(|l| l.starts_with("composite,0,all,")).unwrap();
    let p: f64 = all.rsplit(',').next().unwrap().parse().unwrap();
    assert_eq!(summary.strategies[0].mean, p);
}

#[test]
fn simulate_accepts_generated_files() {
    let dir = tempfile::tempdir().unwrap();
    let world = dir.path().join("w");
    let mut args = vec!["gen", "-o", s(&world)];
    args.extend(SMALL);
    ok(&args);
    let out = dir.path().join("f");
    let reg = world.join("registry.json");
    let col = world.join("collection.json");
    simulate(&out, &["--registry", s(&reg), "--collection", s(&col)]);
    let summary: Summary = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.trials, 1);
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("registry.json") && manifest.contains("collection.json"));
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["simulate", "--no-such-flag"]), 2);
    assert_eq!(code(&["simulate", "--strategies", "psychic"]), 2);
    assert_eq!(code(&["simulate", "--min-order", "5", "--max-order", "3"]), 2);
    assert_eq!(code(&["simulate", "--p-atomic-sub", "2"]), 2);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    assert_eq!(code(&["simulate", "--services", "3", "--trials", "1", "-o", s(&out)]), 1);
}

#[test]
fn chart_draws_bars_or_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c");
    simulate(&out, &["--trials", "2"]);
    let summary = out.join("summary.json");
    let svg = out.join("chart.svg");
    ok(&["chart", "--summary", s(&summary), "--by-order", "-o", s(&svg)]);
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") && text.contains("Recovery Probability"));
    assert_eq!(text.matches("class=\"bar\"").count(), 10);
    assert!(out.join("chart.svg.manifest.json").exists());

    assert_eq!(code(&["chart", "--summary", s(&dir.path().join("missing.json"))]), 1);
    let mut empty: serde_json::Value = serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    empty["strategies"] = serde_json::json!([]);
    let empty_path = dir.path().join("empty.json");
    fs::write(&empty_path, empty.to_string()).unwrap();
    let res = run(&["chart", "--summary", s(&empty_path), "-o", s(&dir.path().join("e.svg"))]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("no strategies"));
}
