//! Uniform random vertex colorings.

use alloc::vec::Vec;

use crate::graph::VertexId;
use crate::hash::{bounded, hash_pair};
use crate::subset::MAX_COLORS;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    k: usize,
    seed: u64,
    colors: Vec<u8>,
}

impl Coloring {
    /// Color of `v` under `seed`: a pure function, so every worker derives
    /// the same color for any vertex without communication.
    #[inline]
    pub fn color_of(seed: u64, k: usize, v: VertexId) -> u8 {
        bounded(hash_pair(seed, v as u64), k as u64) as u8
    }

    pub fn random(n_vertices: usize, k: usize, seed: u64) -> Result<Coloring> {
        check_k(k)?;
        let colors = (0..n_vertices as VertexId)
            .map(|v| Self::color_of(seed, k, v))
            .collect();
        Ok(Coloring { k, seed, colors })
    }

    /// Explicit colors, e.g. for hand-built test cases.
    pub fn from_colors(k: usize, colors: Vec<u8>) -> Result<Coloring> {
        check_k(k)?;
        if colors.iter().any(|&c| c as usize >= k) {
            return Err(Error::invalid("color outside 0..k"));
        }
        Ok(Coloring { k, seed: 0, colors })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn color(&self, v: VertexId) -> u8 {
        self.colors[v as usize]
    }

    pub fn colors(&self) -> &[u8] {
        &self.colors
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 || k > MAX_COLORS {
        return Err(Error::invalid("color count must be in 1..=31"));
    }
    Ok(())
}
