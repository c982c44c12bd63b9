use std::path::PathBuf;
use std::process::{Command, Output};
use std::sync::Arc;

use clairvoyant::estimate::estimate_evasiveness;
use clairvoyant::evasive::build_evasive_k5;
use clairvoyant::walk::RandomSource;
use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clairvoyant"))
        .args(args)
        .env_remove("CLAIRVOYANT_DEV")
        .env_remove("CLAIRVOYANT_SEED")
        .output()
        .unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stderr));
    })
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn classify_claw() {
    let out = run(&["classify", "--graph", &fixture("k13.json")]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["format"], "clairvoyant-report/1");
    assert_eq!(r["result"]["class"]["evasive_exists"], false);
    assert_eq!(r["result"]["class"]["is_k13"], true);
}

#[test]
fn classify_y111_has_no_double_edge_pivot() {
    let r = report(&run(&["classify", "--graph", &fixture("y111.json")]));
    assert_eq!(r["result"]["class"]["evasive_exists"], true);
    assert_eq!(r["result"]["class"]["strong_evasive_exists"], false);
    assert!(r["result"]["double_edge_pivot"].is_null());
}

#[test]
fn schedule_swap_fails_with_blocking_prefix() {
    let out = run(&["schedule", "--graph", &fixture("k4.json"), "--r-text", "A B", "--s-text", "B A"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["result"]["success"], false);
    assert_eq!(r["result"]["blocking_prefix_length"], 2);
}

#[test]
fn schedule_from_files() {
    let (r, s) = (scratch("r.txt"), scratch("s.txt"));
    std::fs::write(&r, "# alternating\nA B A B\nA B\n").unwrap();
    std::fs::write(&s, "C D C D C D").unwrap();
    let out = run(&[
        "schedule",
        "--graph",
        &fixture("k4.json"),
        "--r",
        r.to_str().unwrap(),
        "--s",
        s.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"]["success"], true);
}

#[test]
fn covering_verify_example_and_failure() {
    let k4 = fixture("k4.json");
    let args = ["covering", "verify", "--graph", &k4, "--sub", "A,B,C", "--l", "3", "--walk-text"];
    let ok = run(&[&args[..], &["A B C A C B A"]].concat());
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(report(&ok)["result"]["covered"], true);

    let bad = run(&[&args[..], &["A B C A"]].concat());
    assert_eq!(bad.status.code(), Some(1));
    assert!(report(&bad)["result"]["uncovered"].is_array());
}

#[test]
fn covering_build_output_verifies() {
    let k4 = fixture("k4.json");
    let walk = scratch("cover.txt");
    let built = run(&[
        "covering", "build", "--graph", &k4, "--sub", "A,B,C", "--l", "3", "--anchor", "A", "--out",
        walk.to_str().unwrap(),
    ]);
    assert_eq!(built.status.code(), Some(0));
    let check = run(&[
        "covering", "verify", "--graph", &k4, "--sub", "A,B,C", "--l", "3", "--walk", walk.to_str().unwrap(),
    ]);
    assert_eq!(check.status.code(), Some(0));
}

#[test]
fn construction_on_path_is_a_domain_failure() {
    let out = run(&["construct", "t26", "--graph", &fixture("p4.json"), "--prefix", "10"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn randomized_commands_need_a_seed() {
    let out = run(&["cycle", "survive", "--horizons", "5", "--trials", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));

    // The dev default is ignored unless dev mode is on.
    let bin = env!("CARGO_BIN_EXE_clairvoyant");
    let args = ["cycle", "survive", "--horizons", "5", "--trials", "10"];
    let off = Command::new(bin).args(args).env_remove("CLAIRVOYANT_DEV").env("CLAIRVOYANT_SEED", "4").output().unwrap();
    assert_eq!(off.status.code(), Some(2));
    let on = Command::new(bin)
        .args(args)
        .env("CLAIRVOYANT_DEV", "1")
        .env("CLAIRVOYANT_SEED", "4")
        .output()
        .unwrap();
    assert_eq!(on.status.code(), Some(0));
    assert_eq!(report(&on)["parameters"]["seed"], 4);
}

#[test]
fn usage_and_parse_errors_exit_2() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let bad = scratch("bad.json");
    std::fs::write(&bad, r#"{"format":"clairvoyant-graph/1","vertices":["A","B"],"edges":[["A","B"],["B","Q"]]}"#).unwrap();
    let out = run(&["classify", "--graph", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("edges[1]"));

    std::fs::write(&bad, "{\n  \"format\": \"clairvoyant-graph/1\",\n  \"vertices\": [\"A\",\n}").unwrap();
    let out = run(&["classify", "--graph", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));

    let out = run(&["schedule", "--graph", &fixture("k4.json"), "--r-text", "A A", "--s-text", "B"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_are_seed_deterministic_and_thread_independent() {
    let k4 = fixture("k4.json");
    let args = ["estimate", "evasive", "--graph", &k4, "--walk-text", "A B C A C B A B C", "--horizon", "6"];
    let a = run(&[&args[..], &["--trials", "3000", "--seed", "11", "--parallel", "1"]].concat());
    let b = run(&[&args[..], &["--trials", "3000", "--seed", "11", "--parallel", "4"]].concat());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);

    let v = ["variant", "directed", "--graph", &fixture("directed_two_triangles.json"), "--runs", "4"];
    let a = run(&[&v[..], &["--horizon", "500", "--seed", "2"]].concat());
    let b = run(&[&v[..], &["--horizon", "500", "--seed", "2", "--parallel", "2"]].concat());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn constructed_walk_round_trips_through_files() {
    let (walk, graph) = (scratch("k5.txt"), scratch("k5.json"));
    let out = run(&[
        "construct", "k5", "--prefix", "600", "--out", walk.to_str().unwrap(), "--graph-out",
        graph.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let est = run(&[
        "estimate", "evasive", "--graph", graph.to_str().unwrap(), "--walk", walk.to_str().unwrap(), "--horizon",
        "500", "--trials", "400", "--seed", "9", "--condition", "v4",
    ]);
    assert_eq!(est.status.code(), Some(0));

    let c = build_evasive_k5(5, 600).unwrap();
    let g: &Arc<_> = c.walk.graph();
    let v4 = g.vertex("v4").unwrap();
    let direct = estimate_evasiveness(&c.walk, 500, 400, RandomSource::new(9), Some(v4)).unwrap();
    assert_eq!(report(&est)["result"], serde_json::to_value(&direct).unwrap());
}

#[test]
fn variant_fixtures_run_clean() {
    for (kind, file, case) in [
        ("colored", "colored_case1.json", Some("case1")),
        ("colored", "colored_case2.json", Some("case2")),
        ("directed", "directed_two_triangles.json", None),
    ] {
        let out = run(&["variant", kind, "--graph", &fixture(file), "--runs", "3", "--horizon", "400", "--seed", "5"]);
        assert_eq!(out.status.code(), Some(0), "{file}");
        let r = report(&out);
        assert_eq!(r["result"]["totals"]["collided"], 0);
        if let Some(c) = case {
            assert_eq!(r["result"]["case"]["case"], c);
        }
    }
}

#[test]
fn cycle_commands() {
    let out = run(&["cycle", "confined", "--steps", "4", "--radius", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"]["count"], "4");

    let out = run(&["cycle", "confined", "--steps", "20000", "--radius", "3"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&[
        "cycle", "winding", "--graph", &fixture("c4.json"), "--r-text", "A B C D A B", "--s-text", "C B A D C",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"]["relation"]["holds"], true);
}

#[test]
fn excursion_stats_on_k4() {
    let out = run(&["stats", "excursion", "--graph", &fixture("k4.json"), "--vertex", "A", "--anchor", "B"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["q_exact"], "1/2");
    assert_eq!(r["result"]["pmf_exact"][1], "1/3");
}
