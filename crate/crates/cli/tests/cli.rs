use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cocluster"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON object")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn planted(dir: &TempDir) -> PathBuf {
    let path = dir.path().join("planted.tsv");
    let out = run(&[
        "synth",
        "--blocks",
        "2",
        "--users-per-block",
        "5",
        "--items-per-block",
        "5",
        "--pu",
        "1.0",
        "--po",
        "0.0",
        "--seed",
        "7",
        "--out",
        s(&path),
    ]);
    assert!(out.status.success());
    path
}

#[test]
fn synth_is_deterministic() {
    let args = [
        "synth", "--blocks", "2", "--pu", "1.0", "--po", "0.0", "--seed", "7",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
    // 2 blocks of K_{3,3}
    assert_eq!(String::from_utf8_lossy(&a.stdout).lines().count(), 18);
}

#[test]
fn synth_random_graph_has_requested_edges() {
    let out = run(&[
        "synth",
        "--n-edges",
        "40",
        "--n-users",
        "10",
        "--n-items",
        "12",
        "--seed",
        "3",
    ]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 40);
}

#[test]
fn oracle_finds_two_pair_optimum() {
    let dir = TempDir::new().unwrap();
    let edges = write(&dir, "e.tsv", "a\tx\nb\ty\n");
    let v = json(&run(&[
        "oracle",
        "--edges",
        s(&edges),
        "--gamma",
        "0.5",
        "--scheme",
        "cpm-unit",
    ]));
    assert!((v["score"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(v["users"]["a"], v["items"]["x"]);
    assert_ne!(v["users"]["a"], v["users"]["b"]);
}

#[test]
fn oracle_rejects_large_graph() {
    let dir = TempDir::new().unwrap();
    let text: String = (0..10).map(|k| format!("u{k}\ti{k}\n")).collect();
    let edges = write(&dir, "e.tsv", &text);
    let out = run(&["oracle", "--edges", s(&edges), "--gamma", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn scu_without_dim_is_config_error() {
    let dir = TempDir::new().unwrap();
    let edges = planted(&dir);
    let out = run(&[
        "cluster",
        "--edges",
        s(&edges),
        "--out",
        s(&dir.path().join("a.txt")),
        "--gamma",
        "1",
        "--budget",
        "4",
        "--scu",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_edge_list_exits_one() {
    let dir = TempDir::new().unwrap();
    let edges = write(&dir, "e.tsv", "a x\n");
    let out = run(&[
        "cluster",
        "--edges",
        s(&edges),
        "--out",
        s(&dir.path().join("a.txt")),
        "--gamma",
        "1",
        "--budget",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn cluster_output_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let edges = planted(&dir);
    let mut files = Vec::new();
    for k in 0..2 {
        let out_path = dir.path().join(format!("a{k}.txt"));
        let v = json(&run(&[
            "cluster",
            "--edges",
            s(&edges),
            "--out",
            s(&out_path),
            "--gamma",
            "0.1",
            "--budget",
            "12",
            "--dim",
            "4",
            "--scu",
        ]));
        for key in [
            "iterations",
            "k_user",
            "k_item",
            "objective",
            "budget_met",
            "wall_ms",
            "gini_user",
            "gini_item",
            "accl",
        ] {
            assert!(v.get(key).is_some(), "missing key {key}");
        }
        files.push(fs::read(&out_path).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert!(String::from_utf8_lossy(&files[0]).starts_with("#BACOSKETCH v1"));
}

#[test]
fn metrics_on_planted_assignment_has_no_cross_links() {
    let dir = TempDir::new().unwrap();
    let edges = planted(&dir);
    let assignment = dir.path().join("a.txt");
    let v = json(&run(&[
        "cluster",
        "--edges",
        s(&edges),
        "--out",
        s(&assignment),
        "--gamma",
        "0.1",
        "--budget",
        "4",
    ]));
    assert_eq!(v["accl"].as_f64(), Some(0.0));
    let m = json(&run(&[
        "metrics",
        "--edges",
        s(&edges),
        "--assignment",
        s(&assignment),
    ]));
    assert_eq!(m["accl"].as_f64(), Some(0.0));
    assert_eq!(m["cross_edges"].as_u64(), Some(0));
    assert_eq!(m["gini_user"].as_f64(), Some(0.0));
}

#[test]
fn metrics_on_singletons_has_zero_gini() {
    let dir = TempDir::new().unwrap();
    let edges = write(&dir, "e.tsv", "a\tx\nb\ty\nc\tz\n");
    let assignment = write(
        &dir,
        "a.txt",
        "#BACOSKETCH v1 K_u=3 K_v=3 gamma=1 scu=0 scheme=hws\n\
         U\ta\t0\nU\tb\t1\nU\tc\t2\nI\tx\t0\nI\ty\t1\nI\tz\t2\n",
    );
    let m = json(&run(&[
        "metrics",
        "--edges",
        s(&edges),
        "--assignment",
        s(&assignment),
    ]));
    assert_eq!(m["gini_user"].as_f64(), Some(0.0));
    assert_eq!(m["gini_item"].as_f64(), Some(0.0));
}

#[test]
fn metrics_with_foreign_tokens_exits_three() {
    let dir = TempDir::new().unwrap();
    let edges = write(&dir, "e.tsv", "a\tx\nb\ty\n");
    let assignment = write(
        &dir,
        "a.txt",
        "#BACOSKETCH v1 K_u=1 K_v=1 gamma=1 scu=0 scheme=hws\nU\tq\t0\nU\tr\t0\nI\tx\t0\nI\ty\t0\n",
    );
    let out = run(&[
        "metrics",
        "--edges",
        s(&edges),
        "--assignment",
        s(&assignment),
    ]);
    assert_eq!(out.status.code(), Some(3));
}
