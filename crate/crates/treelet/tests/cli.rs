use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_treelet");

fn treelet(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn treelet")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn generated(dir: &Path) -> String {
    let path = dir.join("g.txt");
    let path = path.to_str().unwrap();
    let out = treelet(&["generate", "--vertices", "256", "--edges", "1200", "--skew", "0.5", "--seed", "3", "--out", path]);
    assert!(out.status.success());
    assert_eq!(json(&out)["vertices"], 256);
    path.to_string()
}

fn run(graph: &str, extra: &[&str]) -> Value {
    let mut args = vec!["--graph", graph, "--template", "u5-2", "--niter", "4", "--lanes", "1"];
    args.extend_from_slice(extra);
    let out = treelet(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    json(&out)
}

#[test]
fn runs_are_reproducible_and_mode_independent() {
    let dir = tempfile::tempdir().unwrap();
    let g = generated(dir.path());
    let a = run(&g, &["--workers", "3", "--mode", "pipeline"]);
    let b = run(&g, &["--workers", "3", "--mode", "pipeline"]);
    let c = run(&g, &["--workers", "3", "--mode", "naive", "--load-balance", "off"]);
    let d = run(&g, &["--workers", "1"]);
    assert_eq!(a["estimate"], b["estimate"]);
    assert_eq!(a["colorful_totals"], c["colorful_totals"]);
    assert_eq!(a["colorful_totals"], d["colorful_totals"]);
    for key in ["estimate", "values", "niter", "phases", "comm_ratio", "peak_bytes", "template", "graph", "config"] {
        assert!(!a[key].is_null(), "missing {key}");
    }
    assert_eq!(a["niter"], 4);
    assert_eq!(a["config"]["template"], "u5-2");
}

#[test]
fn metrics_go_to_the_requested_file() {
    let dir = tempfile::tempdir().unwrap();
    let g = generated(dir.path());
    let dest = dir.path().join("m.json");
    let out = treelet(&["--graph", &g, "--template", "u3-1", "--niter", "2", "--out", dest.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let report: Value = serde_json::from_slice(&std::fs::read(dest).unwrap()).unwrap();
    assert!(report["estimate"].as_f64().unwrap() > 0.0);
}

#[test]
fn failures_print_an_error_object_and_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.txt");
    let out = treelet(&["--graph", missing.to_str().unwrap(), "--template", "u5-2"]);
    assert!(!out.status.success());
    let body = json(&out);
    assert!(body["error"]["kind"].is_string());
    assert!(body["error"]["message"].as_str().unwrap().contains("absent.txt"));

    let g = generated(dir.path());
    let cycle = dir.path().join("cycle.txt");
    std::fs::write(&cycle, "3\n0 1\n1 2\n2 0\n").unwrap();
    let out = treelet(&["--graph", &g, "--template", cycle.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(json(&out)["error"]["message"].is_string());

    let out = treelet(&["--graph", &g, "--template", "u5-2", "--workers", "0"]);
    assert!(!out.status.success());
    assert!(json(&out)["error"]["kind"].is_string());
}

#[test]
fn costs_reports_the_calibrated_intensity() {
    let out = treelet(&["costs", "--template", "u12-2"]);
    assert!(out.status.success());
    let body = json(&out);
    assert_eq!(body["vertices"], 12);
    let intensity = body["intensity"].as_f64().unwrap();
    assert!((intensity - 12.13).abs() < 0.01, "{intensity}");
    assert!(body["variants"].as_array().unwrap().len() > 1);
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

#[test]
fn separate_processes_agree_with_in_process_workers() {
    let dir = tempfile::tempdir().unwrap();
    let g = generated(dir.path());
    let peers = format!("127.0.0.1:{},127.0.0.1:{}", free_port(), free_port());
    let args = ["--graph", g.as_str(), "--template", "u5-2", "--niter", "4", "--lanes", "1", "--mode", "pipeline"];
    let children: Vec<_> = (0..2)
        .map(|rank| {
            Command::new(BIN)
                .args(args)
                .env("TREELET_PEERS", &peers)
                .env("TREELET_RANK", rank.to_string())
                .stdout(std::process::Stdio::piped())
                .spawn()
                .unwrap()
        })
        .collect();
    let outputs: Vec<Value> = children
        .into_iter()
        .map(|c| {
            let out = c.wait_with_output().unwrap();
            assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
            json(&out)
        })
        .collect();
    let local = run(&g, &["--workers", "2", "--mode", "pipeline"]);
    assert_eq!(outputs[0]["colorful_totals"], outputs[1]["colorful_totals"]);
    assert_eq!(outputs[0]["colorful_totals"], local["colorful_totals"]);
    assert_eq!(outputs[0]["estimate"], local["estimate"]);
}
