#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicBool, Ordering};

use treelet_core::hash::hash_pair;
use treelet_core::template::RootChoice;
use treelet_core::{Graph, Template, VertexId};

/// Erdős–Rényi graph from a hash stream, reproducible from `seed`.
pub fn gnp(n: usize, p: f64, seed: u64) -> Graph {
    let threshold = (p * u64::MAX as f64) as u64;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if hash_pair(seed, (i * n + j) as u64) < threshold {
                edges.push((i as VertexId, j as VertexId));
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap().0
}

/// One representative of every unlabeled tree on `n` vertices, rooted at
/// vertex 0 of the representative.
pub fn unrooted_trees(n: usize) -> Vec<Template> {
    if n == 1 {
        return vec![Template::new(1, &[], RootChoice::First).unwrap()];
    }
    if n == 2 {
        return vec![Template::path(2)];
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut seq = vec![0usize; n - 2];
    loop {
        let t = Template::new(n, &prufer_edges(&seq, n), RootChoice::First).unwrap();
        let key = (0..n).map(|r| t.canonical_rooted_form(r)).min().unwrap();
        if seen.insert(key) {
            out.push(t);
        }
        let mut i = 0;
        while i < seq.len() {
            seq[i] += 1;
            if seq[i] < n {
                break;
            }
            seq[i] = 0;
            i += 1;
        }
        if i == seq.len() {
            return out;
        }
    }
}

fn prufer_edges(seq: &[usize], n: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1; n];
    for &x in seq {
        degree[x] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &x in seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
        edges.push((leaf, x));
        degree[leaf] -= 1;
        degree[x] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Prints the one-line verdict of an acceptance check and fails the test
/// when it did not pass.
pub fn verdict(name: &str, pass: bool, detail: String) {
    println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    REPORTED.store(true, Ordering::SeqCst);
    assert!(pass, "{name}: {detail}");
}

static REPORTED: AtomicBool = AtomicBool::new(false);

/// Whether [`verdict`] printed since the last call; clears the flag.
pub fn take_reported() -> bool {
    REPORTED.swap(false, Ordering::SeqCst)
}
