#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treelet_core::template::RootChoice;
use treelet_core::{Graph, Template};

/// All labeled trees on `n` vertices, decoded from Prüfer sequences.
pub fn labeled_trees(n: usize) -> Vec<Vec<(usize, usize)>> {
    if n == 1 {
        return vec![vec![]];
    }
    if n == 2 {
        return vec![vec![(0, 1)]];
    }
    let mut out = Vec::new();
    let mut seq = vec![0; n - 2];
    loop {
        out.push(prufer_edges(&seq, n));
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
    let mut edges = Vec::new();
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

/// One representative per isomorphism class of unrooted trees on `n`
/// vertices (class key: smallest rooted code over all roots).
pub fn unrooted_trees(n: usize) -> Vec<Template> {
    let mut seen = std::collections::BTreeSet::new();
    let mut reps = Vec::new();
    for edges in labeled_trees(n) {
        let t = Template::new(n, &edges, RootChoice::First).unwrap();
        let key = (0..n).map(|r| t.canonical_rooted_form(r)).min().unwrap();
        if seen.insert(key) {
            reps.push(t);
        }
    }
    reps
}

/// Every tree with at most `max_n` vertices, once per distinct rooting.
pub fn rooted_trees_up_to(max_n: usize) -> Vec<Template> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        for t in unrooted_trees(n) {
            let mut codes = std::collections::BTreeSet::new();
            for r in 0..n {
                if codes.insert(t.canonical_rooted_form(r)) {
                    out.push(t.with_root(RootChoice::Vertex(r)).unwrap());
                }
            }
        }
    }
    out
}

pub fn gnp(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap().0
}

/// All permutations of `0..n`.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}
