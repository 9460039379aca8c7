use std::path::PathBuf;
use std::process::{Command, Output};

use eicp::graphs::SideInfoBipartiteGraph;
use eicp::model::parse_instance;
use serde_json::Value;

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name]
        .iter()
        .collect();
    p.to_string_lossy().into_owned()
}

fn eicp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eicp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn minrank_example_one() {
    let out = eicp(&["minrank", &fixture("example1.json"), "--oracle"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = stdout_json(&out);
    assert_eq!(v["kappa"], 3);
    assert_eq!(v["oracle"]["agrees"], true);
}

#[test]
fn minrank_stats_counts_nine_matrices() {
    let out = eicp(&["minrank", &fixture("example2.json"), "--stats"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["complexity"]["actual"], 9);
    assert_eq!(
        v["stats"]["candidate_sizes"],
        serde_json::json!([3, 3, 1, 1])
    );
}

#[test]
fn minrank_q_override() {
    let out = eicp(&["minrank", &fixture("example1.json"), "--q-override", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["kappa"], 3);
    let bad = eicp(&["minrank", &fixture("example1.json"), "--q-override", "6"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn malformed_instance_exits_one() {
    let out = eicp(&["minrank", &fixture("malformed.json")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("malformed"));
    let missing = eicp(&["validate", &fixture("no_such_file.json")]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn invalid_instance_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"q":2,"num_users":2,"num_messages":2,"side_info":[[1],[2]],"demands":[1,1]}"#,
    )
    .unwrap();
    let path = path.to_string_lossy().into_owned();
    let out = eicp(&["validate", &path]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["valid"], false);
    assert_eq!(eicp(&["minrank", &path]).status.code(), Some(1));
}

#[test]
fn node_guard_exits_two() {
    let out = Command::new(env!("CARGO_BIN_EXE_eicp"))
        .args(["minrank", &fixture("example3.json")])
        .env("EICP_GUARD_NODES", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn tree_minrank_disagrees_with_shortest_code() {
    let out = eicp(&["minrank", &fixture("tree4.json"), "--oracle"]);
    assert_eq!(out.status.code(), Some(3));
    let v = stdout_json(&out);
    assert_eq!(v["kappa"], 4);
    assert_eq!(v["oracle"]["length"], 3);
}

#[test]
fn cover_example_three() {
    let tree = eicp(&["cover", &fixture("example3.json"), "--scheme", "tree"]);
    assert_eq!(tree.status.code(), Some(0));
    assert_eq!(stdout_json(&tree)["counts"]["length"], 4);
    let bic = eicp(&[
        "cover",
        &fixture("example3.json"),
        "--scheme",
        "biclique",
        "--exact",
    ]);
    assert_eq!(bic.status.code(), Some(0));
    let v = stdout_json(&bic);
    assert_eq!(v["counts"]["length"], 3);
    assert_eq!(v["counts"]["K"], 2);
}

#[test]
fn cover_single_uniprior_is_uncoded() {
    let out = eicp(&[
        "cover",
        &fixture("single_uniprior.json"),
        "--scheme",
        "tree",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["counts"]["length"], 4);
}

#[test]
fn cover_rejects_repeated_demands() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("multi.json");
    std::fs::write(
        &path,
        r#"{"q":2,"num_users":3,"num_messages":3,"side_info":[[1],[2],[3,1]],"demands":[3,3,2]}"#,
    )
    .unwrap();
    let out = eicp(&["cover", &path.to_string_lossy(), "--scheme", "tree"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("single unicast"));
}

#[test]
fn verify_codes() {
    let inst = fixture("example1.json");
    let ok = eicp(&["verify", &inst, &fixture("example1_code.json")]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(stdout_json(&ok)["overall"], true);

    let short = eicp(&["verify", &inst, &fixture("example1_code_truncated.json")]);
    assert_eq!(short.status.code(), Some(1));
    let v = stdout_json(&short);
    let failing: Vec<u64> = v["users"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|u| u["decodable_from_others"] == false)
        .map(|u| u["user"].as_u64().unwrap())
        .collect();
    assert_eq!(failing, vec![2]);
    assert!(stderr(&short).contains("user 2"));

    let bad = eicp(&["verify", &inst, &fixture("example1_code_bad_support.json")]);
    assert_eq!(bad.status.code(), Some(1));
    let v = stdout_json(&bad);
    assert_eq!(v["support_violations"][0]["user"], 1);
    assert_eq!(
        v["support_violations"][0]["messages"],
        serde_json::json!([4])
    );
}

#[test]
fn gen_is_deterministic() {
    let args = [
        "gen", "--model", "uniform", "-n", "4", "-m", "4", "--seed", "7",
    ];
    let a = eicp(&args);
    let b = eicp(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let inst = parse_instance(&String::from_utf8(a.stdout).unwrap()).unwrap();
    assert_eq!(inst.num_users(), 4);
}

#[test]
fn gen_vanet() {
    for seed in ["1", "2", "3"] {
        let out = eicp(&[
            "gen",
            "--model",
            "vanet",
            "-n",
            "6",
            "-m",
            "5",
            "--overlap",
            "0.8",
            "--seed",
            seed,
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        let inst = parse_instance(&String::from_utf8(out.stdout).unwrap()).unwrap();
        assert!(SideInfoBipartiteGraph::from_instance(&inst).is_connected());
    }
    let low = eicp(&["gen", "--model", "vanet", "--overlap", "0.2"]);
    assert_eq!(low.status.code(), Some(1));
}

#[test]
fn structures_lists_witnesses() {
    let out = eicp(&["structures", &fixture("example3.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let big = v["bicliques"]
        .as_array()
        .unwrap()
        .iter()
        .any(|b| b["messages"] == serde_json::json!([1, 2, 3, 4]) && b["covered"] == true);
    assert!(big);
    assert!(!v["regular_trees"].as_array().unwrap().is_empty());
}

#[test]
fn experiment_fig5_tsv() {
    let out = eicp(&["experiment", "fig5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 9);
    assert!(text.contains("# verdict\tpass"));
}

#[test]
fn experiment_json_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.json");
    let out = eicp(&[
        "experiment",
        "lemma-sweep",
        "--kind",
        "biclique",
        "--from",
        "2",
        "--to",
        "4",
        "--json",
        "--out",
        &path.to_string_lossy(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["verdict"]["pass"], true);
    assert_eq!(v["rows"].as_array().unwrap().len(), 6);
}

#[test]
fn experiment_out_of_range_sweep() {
    let out = eicp(&[
        "experiment",
        "lemma-sweep",
        "--kind",
        "tree",
        "--from",
        "3",
        "--to",
        "9",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn failing_experiment_counterexample_reproduces() {
    let out = eicp(&[
        "experiment",
        "lemma-sweep",
        "--kind",
        "tree",
        "--from",
        "4",
        "--to",
        "4",
        "--random-trees",
        "0",
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_eq!(v["verdict"]["pass"], false);
    let inst = &v["verdict"]["counterexample"]["instance"];
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cx.json");
    std::fs::write(&path, serde_json::to_string(inst).unwrap()).unwrap();
    let rerun = eicp(&["minrank", &path.to_string_lossy(), "--oracle"]);
    assert_eq!(rerun.status.code(), Some(3));
    assert_eq!(stdout_json(&rerun)["kappa"], 4);
}

#[test]
fn experiment_reports_are_reproducible() {
    let args = ["experiment", "theorem2", "--n-max", "3", "--m-max", "3"];
    let a = eicp(&args);
    let b = eicp(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}
