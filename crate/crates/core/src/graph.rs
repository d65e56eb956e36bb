//! Undirected simple graphs in compressed sparse row form.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

pub type VertexId = u32;

/// Compressed adjacency lists: row `i` is `targets[offsets[i]..offsets[i + 1]]`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Csr {
    offsets: Vec<usize>,
    targets: Vec<VertexId>,
}

impl Csr {
    pub fn from_lists<I, L>(lists: I) -> Self
    where
        I: IntoIterator<Item = L>,
        L: AsRef<[VertexId]>,
    {
        let mut offsets = vec![0];
        let mut targets = Vec::new();
        for list in lists {
            targets.extend_from_slice(list.as_ref());
            offsets.push(targets.len());
        }
        Csr { offsets, targets }
    }

    pub fn n_rows(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[VertexId] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn row_len(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// Total number of stored entries over all rows.
    pub fn n_entries(&self) -> usize {
        self.targets.len()
    }

    /// All entries, row after row; task ranges index into this slice.
    pub fn entries(&self) -> &[VertexId] {
        &self.targets
    }

    pub fn row_start(&self, i: usize) -> usize {
        self.offsets[i]
    }
}

/// What [`Graph::from_edges`] discarded while building a simple graph.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub duplicate_edges: usize,
    pub self_loops: usize,
}

impl BuildReport {
    pub fn dropped(&self) -> usize {
        self.duplicate_edges + self.self_loops
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeStats {
    pub avg: f64,
    pub max: usize,
}

/// An immutable undirected simple graph. Both directions of every edge are
/// stored and every neighbor list is sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Csr,
    n_edges: usize,
}

impl Graph {
    /// Builds a graph on `n` vertices. Self-loops and repeated edges (in either
    /// orientation) are dropped and counted in the returned report.
    pub fn from_edges(n: usize, edges: &[(VertexId, VertexId)]) -> Result<(Graph, BuildReport)> {
        if n > VertexId::MAX as usize {
            return Err(Error::invalid("vertex count exceeds 32-bit ids"));
        }
        let mut report = BuildReport::default();
        let mut pairs = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            for x in [u, v] {
                if x as usize >= n {
                    return Err(Error::VertexOutOfRange {
                        vertex: x as u64,
                        n_vertices: n,
                    });
                }
            }
            if u == v {
                report.self_loops += 1;
            } else {
                pairs.push((u.min(v), u.max(v)));
            }
        }
        pairs.sort_unstable();
        let before = pairs.len();
        pairs.dedup();
        report.duplicate_edges = before - pairs.len();

        let mut degree = vec![0usize; n];
        for &(u, v) in &pairs {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut targets = vec![0; 2 * pairs.len()];
        // Pairs are sorted by (low, high): every list receives its smaller
        // neighbors first and its larger neighbors after, both ascending.
        for &(u, v) in &pairs {
            targets[fill[u as usize]] = v;
            fill[u as usize] += 1;
            targets[fill[v as usize]] = u;
            fill[v as usize] += 1;
        }
        let graph = Graph {
            adj: Csr { offsets, targets },
            n_edges: pairs.len(),
        };
        debug_assert!((0..n).all(|v| graph.neighbors(v as VertexId).windows(2).all(|w| w[0] < w[1])));
        Ok((graph, report))
    }

    pub fn empty(n: usize) -> Graph {
        Graph::from_edges(n, &[]).expect("empty graph").0
    }

    pub fn n_vertices(&self) -> usize {
        self.adj.n_rows()
    }

    /// Number of undirected edges.
    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    /// Number of stored adjacency entries, i.e. `2 * n_edges`.
    pub fn n_adjacency_entries(&self) -> usize {
        self.adj.n_entries()
    }

    #[inline]
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        self.adj.row(v as usize)
    }

    #[inline]
    pub fn degree(&self, v: VertexId) -> usize {
        self.adj.row_len(v as usize)
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Each undirected edge once, as `(low, high)`.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        (0..self.n_vertices() as VertexId).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    pub fn degree_stats(&self) -> DegreeStats {
        let n = self.n_vertices();
        if n == 0 {
            return DegreeStats { avg: 0.0, max: 0 };
        }
        let max = (0..n).map(|v| self.adj.row_len(v)).max().unwrap_or(0);
        DegreeStats {
            avg: self.n_adjacency_entries() as f64 / n as f64,
            max,
        }
    }
}
