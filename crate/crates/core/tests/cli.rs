//! Command-line behavior: golden outputs, plan round trips and exit codes.

use std::path::PathBuf;
use std::process::Command;

use chunkwise::cli::run;
use serde_json::Value;

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "fixtures", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("chunkwise").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(fixture(&format!("golden/{name}"))).unwrap()
}

#[test]
fn outputs_match_goldens() {
    let s32 = fixture("s32.json");
    let fan = fixture("fan3.json");
    let cases: Vec<(Vec<&str>, &str)> = vec![
        (vec!["chunk-edge", "-g", &s32, "-e", "u,v", "-b", "2", "-k", "2"], "chunk_edge_uv_k2.json"),
        (vec!["chunk-edge", "-g", &s32, "-e", "u,v", "-b", "2", "-k", "3"], "chunk_edge_uv_k3.json"),
        (vec!["simulate", "-g", &fan, "-b", "2"], "simulate_fan3.json"),
        (vec!["chunk-graph", "-g", &s32, "-b", "2", "--mode", "local", "-k", "3"], "chunk_graph_local3.json"),
        (vec!["chunk-graph", "-g", &s32, "--biases", "2,10", "--mode", "local", "-k", "3"], "chunk_graph_two_agents.json"),
        (
            vec!["chunk-graph", "-g", &s32, "--biases", "2,3", "--single-path", "--mode", "global", "-k", "6"],
            "chunk_graph_shared.json",
        ),
        (vec!["experiment", "cost-ratio", "-b", "2", "-c", "3/2", "--n-max", "6", "-k", "3"], "cost_ratio.csv"),
    ];
    for (args, name) in cases {
        let (code, out, err) = call(&args);
        assert_eq!(code, 0, "{name}: {err}");
        assert_eq!(out, golden(name), "{name}");
        // Determinism: a second run is byte-identical.
        assert_eq!(call(&args).1, out);
    }
}

#[test]
fn fan_output_is_the_fixture() {
    assert_eq!(call(&["fan", "-n", "3", "-c", "3/2"]).1, golden("../fan3.json"));
    let (_, dot, _) = call(&["fan", "-n", "3", "-c", "3/2", "--format", "dot"]);
    assert!(dot.starts_with("digraph"));
}

#[test]
fn fixture_files_match_builtin_graphs() {
    for (name, g) in [("s32.json", chunkwise::fixtures::s32()), ("branching.json", chunkwise::fixtures::branching())] {
        let loaded = chunkwise::io::load_graph(&std::fs::read(fixture(name)).unwrap()).unwrap();
        let edges = |g: &chunkwise::TaskGraph| {
            let mut v: Vec<(String, String, String)> = g
                .edges()
                .iter()
                .map(|e| (g.name(e.from).to_string(), g.name(e.to).to_string(), e.cost.to_string()))
                .collect();
            v.sort();
            (v, g.name(g.source()).to_string(), g.name(g.sink()).to_string())
        };
        assert_eq!(edges(&loaded), edges(&g), "{name}");
    }
    let (code, out, _) = call(&["simulate", "-g", &fixture("branching.json"), "-b", "2"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["cost"], "21/1");
}

#[test]
fn plans_round_trip_through_simulate() {
    let s32 = fixture("s32.json");
    let dir = std::env::temp_dir().join(format!("chunkwise-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    for (mode, k) in [("local", "3"), ("global", "3"), ("global", "8")] {
        let plan = dir.join(format!("plan-{mode}-{k}.json"));
        let plan_s = plan.to_string_lossy().into_owned();
        let (code, _, err) = call(&["chunk-graph", "-g", &s32, "-b", "2", "--mode", mode, "-k", k, "-o", &plan_s]);
        assert_eq!(code, 0, "{err}");
        let doc: Value = serde_json::from_str(&std::fs::read_to_string(&plan).unwrap()).unwrap();
        let (code, out, _) = call(&["simulate", "-g", &s32, "-b", "2", "--plan", &plan_s]);
        assert_eq!(code, 0);
        let sim: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(sim["cost"], doc["predicted_cost"]);
        assert_eq!(sim["path"], doc["planned_path"]);
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn exit_codes() {
    let s32 = fixture("s32.json");
    // Domain infeasibility is data on stdout.
    let (code, out, _) = call(&["same-path-edge", "-g", &s32, "-e", "u,v", "--biases", "2,3", "-k", "3"]);
    assert_eq!(code, 1);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["error"], "infeasible");
    let (code, out, _) = call(&["split-edge", "-g", &s32, "-e", "u,w", "--biases", "2,3", "-k", "3"]);
    assert_eq!(code, 1);
    assert!(out.contains("taker_refuses"));
    // Input errors go to stderr.
    let (code, out, err) = call(&["chunk-edge", "-g", &s32, "-e", "u,q", "-b", "2", "-k", "3"]);
    assert_eq!((code, out.is_empty()), (2, true));
    assert!(err.contains("error"));
    assert_eq!(call(&["chunk-edge", "-g", &s32, "-e", "u,v", "-b", "1", "-k", "3"]).0, 2);
    assert_eq!(call(&["chunk-edge", "-g", "/nonexistent.json", "-e", "u,v", "-b", "2", "-k", "3"]).0, 2);
    assert_eq!(call(&["no-such-command"]).0, 2);
    assert_eq!(call(&["--help"]).0, 0);
}

#[test]
fn decimal_flag_adds_approximations() {
    let s32 = fixture("s32.json");
    let (_, out, _) = call(&["--decimal", "chunk-edge", "-g", &s32, "-e", "u,v", "-b", "2", "-k", "2"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["bottleneck"], "1551/20");
    assert_eq!(v["bottleneck_decimal"], "77.550000");
}

#[test]
fn verify_passes() {
    let (code, out, err) = call(&["verify", "--suite", "edge-oracle", "--seed", "7", "-k", "3", "-d", "64", "--instances", "40"]);
    assert_eq!(code, 0, "{out}{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["passed"], true);
}

#[test]
fn binary_runs() {
    let out = Command::new(env!("CARGO_BIN_EXE_chunkwise"))
        .args(["chunk-edge", "-g", &fixture("s32.json"), "-e", "u,v", "-b", "2", "-k", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), golden("chunk_edge_uv_k2.json"));
    let out = Command::new(env!("CARGO_BIN_EXE_chunkwise")).args(["bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
