//! Random vertex-to-worker ownership and per-worker adjacency views.

use alloc::vec;
use alloc::vec::Vec;

use crate::graph::{Csr, Graph, VertexId};
use crate::hash::{bounded, hash_pair};
use crate::{Error, Result};

/// Largest worker count addressable by the 12-bit sender/receiver fields of
/// a packet meta id.
pub const MAX_WORKERS: usize = 1 << 12;

const OWNER_DOMAIN: u64 = 0x3C6E_F372_FE94_F82B;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    n_workers: usize,
    owner: Vec<u16>,
    slot: Vec<u32>,
    local: Vec<Vec<VertexId>>,
}

impl Partition {
    /// Owner of `v` is a seeded 64-bit hash of its id, reduced onto `0..P`.
    pub fn random(g: &Graph, n_workers: usize, seed: u64) -> Result<Partition> {
        if n_workers == 0 {
            return Err(Error::invalid("worker count must be at least 1"));
        }
        if n_workers > MAX_WORKERS {
            return Err(Error::invalid("worker count exceeds 4096"));
        }
        let owners = (0..g.n_vertices() as u64)
            .map(|v| bounded(hash_pair(seed ^ OWNER_DOMAIN, v), n_workers as u64) as u16)
            .collect();
        Ok(Self::from_owners(n_workers, owners))
    }

    fn from_owners(n_workers: usize, owner: Vec<u16>) -> Partition {
        let mut local = vec![Vec::new(); n_workers];
        let mut slot = Vec::with_capacity(owner.len());
        for (v, &p) in owner.iter().enumerate() {
            slot.push(local[p as usize].len() as u32);
            local[p as usize].push(v as VertexId);
        }
        Partition {
            n_workers,
            owner,
            slot,
            local,
        }
    }

    /// Explicit ownership, mainly for hand-built test cases.
    pub fn with_owners(n_workers: usize, owners: &[usize]) -> Result<Partition> {
        if n_workers == 0 || n_workers > MAX_WORKERS {
            return Err(Error::invalid("worker count out of range"));
        }
        if let Some(&bad) = owners.iter().find(|&&p| p >= n_workers) {
            return Err(Error::invalid(alloc::format!("owner {bad} is not a worker")));
        }
        Ok(Self::from_owners(
            n_workers,
            owners.iter().map(|&p| p as u16).collect(),
        ))
    }

    pub fn n_workers(&self) -> usize {
        self.n_workers
    }

    #[inline]
    pub fn owner(&self, v: VertexId) -> usize {
        self.owner[v as usize] as usize
    }

    /// Position of `v` inside its owner's local vertex list.
    #[inline]
    pub fn local_slot(&self, v: VertexId) -> usize {
        self.slot[v as usize] as usize
    }

    /// Vertices owned by worker `p`, ascending.
    pub fn local_vertices(&self, p: usize) -> &[VertexId] {
        &self.local[p]
    }
}

/// One worker's slice of the graph: its vertices, their neighbors on the same
/// worker, and their neighbors on every other worker grouped by owner.
///
/// Row `i` of every CSR corresponds to `vertices[i]`.
#[derive(Debug, Clone)]
pub struct LocalView {
    worker: usize,
    vertices: Vec<VertexId>,
    local: Csr,
    remote: Vec<Csr>,
}

impl LocalView {
    pub fn build(g: &Graph, part: &Partition, worker: usize) -> LocalView {
        let p_count = part.n_workers();
        let vertices = part.local_vertices(worker).to_vec();
        let mut local_lists = Vec::with_capacity(vertices.len());
        let mut remote_lists: Vec<Vec<Vec<VertexId>>> =
            (0..p_count).map(|_| Vec::with_capacity(vertices.len())).collect();
        for &v in &vertices {
            let mut by_owner: Vec<Vec<VertexId>> = vec![Vec::new(); p_count];
            for &u in g.neighbors(v) {
                by_owner[part.owner(u)].push(u);
            }
            for (q, list) in by_owner.into_iter().enumerate() {
                if q == worker {
                    local_lists.push(list);
                } else {
                    remote_lists[q].push(list);
                }
            }
        }
        let remote = remote_lists
            .into_iter()
            .enumerate()
            .map(|(q, lists)| {
                if q == worker {
                    Csr::from_lists(vertices.iter().map(|_| [].as_slice()))
                } else {
                    Csr::from_lists(lists)
                }
            })
            .collect();
        LocalView {
            worker,
            vertices,
            local: Csr::from_lists(local_lists),
            remote,
        }
    }

    pub fn worker(&self) -> usize {
        self.worker
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn n_local(&self) -> usize {
        self.vertices.len()
    }

    /// `N_l(v)` for every local vertex.
    pub fn local_neighbors(&self) -> &Csr {
        &self.local
    }

    /// Neighbors of every local vertex that are owned by `sender`.
    pub fn remote_neighbors(&self, sender: usize) -> &Csr {
        &self.remote[sender]
    }
}
