//! Recursive-matrix (R-MAT) synthetic graphs for desk-scale experiments.
//!
//! Each edge picks one quadrant of the adjacency matrix per bit level with
//! probabilities `(a, b, c, d)`. A single `skew` knob moves mass into the
//! top-left quadrant: `skew = 0` is uniform, larger values concentrate edges
//! on low vertex ids and raise the max/avg degree ratio.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Graph, VertexId};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmatParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl RmatParams {
    /// `a = 0.25 + 0.5 * skew`, remaining mass split evenly over b, c, d.
    pub fn from_skew(skew: f64) -> Result<RmatParams> {
        if !(0.0..1.0).contains(&skew) {
            return Err(Error::invalid("skew must lie in [0, 1)"));
        }
        let a = 0.25 + 0.5 * skew;
        let rest = (1.0 - a) / 3.0;
        Ok(RmatParams { a, b: rest, c: rest })
    }
}

/// Generates a simple undirected graph with exactly `n_edges` distinct edges.
pub fn generate_rmat(n_vertices: usize, n_edges: usize, skew: f64, seed: u64) -> Result<Graph> {
    generate_rmat_with(n_vertices, n_edges, RmatParams::from_skew(skew)?, seed)
}

pub fn generate_rmat_with(
    n_vertices: usize,
    n_edges: usize,
    params: RmatParams,
    seed: u64,
) -> Result<Graph> {
    if n_vertices < 2 || !n_vertices.is_power_of_two() {
        return Err(Error::invalid("R-MAT vertex count must be a power of two >= 2"));
    }
    let max_edges = n_vertices * (n_vertices - 1) / 2;
    if n_edges > max_edges / 2 {
        return Err(Error::invalid("too many edges requested for a sparse R-MAT graph"));
    }
    let levels = n_vertices.trailing_zeros();
    let ab = params.a + params.b;
    let abc = ab + params.c;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut edges: Vec<(VertexId, VertexId)> = Vec::with_capacity(n_edges);
    let attempt_cap = 64 * n_edges + 1024;
    let mut attempts = 0usize;
    while edges.len() < n_edges {
        attempts += 1;
        if attempts > attempt_cap {
            return Err(Error::invalid("R-MAT sampling could not reach the edge count"));
        }
        let (mut u, mut v) = (0usize, 0usize);
        for _ in 0..levels {
            let r: f64 = rng.random();
            let (du, dv) = if r < params.a {
                (0, 0)
            } else if r < ab {
                (0, 1)
            } else if r < abc {
                (1, 0)
            } else {
                (1, 1)
            };
            u = (u << 1) | du;
            v = (v << 1) | dv;
        }
        if u == v {
            continue;
        }
        let key = (u.min(v) as VertexId, u.max(v) as VertexId);
        if seen.insert(key) {
            edges.push(key);
        }
    }
    Ok(Graph::from_edges(n_vertices, &edges)?.0)
}
