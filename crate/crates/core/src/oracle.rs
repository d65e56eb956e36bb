//! Brute-force embedding counts for small instances.
//!
//! Injective template-to-graph maps preserving template edges are
//! enumerated by backtracking; the map count divided by the number of
//! template automorphisms gives the number of subgraph copies, the
//! convention the DP reports.

use alloc::vec;
use alloc::vec::Vec;

use crate::coloring::Coloring;
use crate::graph::{Graph, VertexId};
use crate::template::Template;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_graph_vertices: usize,
    pub max_template_vertices: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_graph_vertices: 50,
            max_template_vertices: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbeddingCount {
    pub total: u64,
    pub colorful: u64,
}

pub fn count_embeddings_exact(g: &Graph, t: &Template) -> Result<u64> {
    check(g, t, OracleLimits::default())?;
    Ok(count_maps(g, t, None) / automorphisms(t))
}

pub fn count_colorful_exact(g: &Graph, t: &Template, coloring: &Coloring) -> Result<u64> {
    count_with_limits(g, t, coloring, OracleLimits::default()).map(|c| c.colorful)
}

pub fn count_with_limits(
    g: &Graph,
    t: &Template,
    coloring: &Coloring,
    limits: OracleLimits,
) -> Result<EmbeddingCount> {
    check(g, t, limits)?;
    if coloring.colors().len() != g.n_vertices() {
        return Err(Error::invalid("coloring does not cover the graph"));
    }
    let aut = automorphisms(t);
    Ok(EmbeddingCount {
        total: count_maps(g, t, None) / aut,
        colorful: count_maps(g, t, Some(coloring.colors())) / aut,
    })
}

fn check(g: &Graph, t: &Template, limits: OracleLimits) -> Result<()> {
    if g.n_vertices() > limits.max_graph_vertices {
        return Err(Error::SizeGuard(alloc::format!(
            "graph has {} vertices, oracle limit is {}",
            g.n_vertices(),
            limits.max_graph_vertices
        )));
    }
    if t.n_vertices() > limits.max_template_vertices {
        return Err(Error::SizeGuard(alloc::format!(
            "template has {} vertices, oracle limit is {}",
            t.n_vertices(),
            limits.max_template_vertices
        )));
    }
    Ok(())
}

/// Number of automorphisms of `t` as an unrooted tree.
pub fn automorphisms(t: &Template) -> u64 {
    let n = t.n_vertices();
    let mut edges = Vec::with_capacity(2 * t.edges().len());
    for &(a, b) in t.edges() {
        edges.push((a as VertexId, b as VertexId));
    }
    let (as_graph, _) = Graph::from_edges(n, &edges).expect("template edges are valid");
    count_maps(&as_graph, t, None)
}

/// Template vertices in BFS order from the root, with each one's parent.
fn bfs_order(t: &Template) -> Vec<(usize, Option<usize>)> {
    let mut order = vec![(t.root(), None)];
    let mut seen = vec![false; t.n_vertices()];
    seen[t.root()] = true;
    let mut i = 0;
    while i < order.len() {
        let x = order[i].0;
        for &y in t.neighbors(x) {
            if !seen[y] {
                seen[y] = true;
                order.push((y, Some(x)));
            }
        }
        i += 1;
    }
    order
}

fn count_maps(g: &Graph, t: &Template, colors: Option<&[u8]>) -> u64 {
    let order = bfs_order(t);
    // Position in `order` of each template vertex's parent.
    let mut pos = vec![0; t.n_vertices()];
    for (i, &(x, _)) in order.iter().enumerate() {
        pos[x] = i;
    }
    let parent_pos: Vec<Option<usize>> = order.iter().map(|&(_, p)| p.map(|p| pos[p])).collect();
    let mut image = vec![0 as VertexId; order.len()];
    let mut used = vec![false; g.n_vertices()];
    let mut total = 0;
    for v in 0..g.n_vertices() as VertexId {
        image[0] = v;
        used[v as usize] = true;
        let mask = colors.map_or(0, |c| 1u64 << c[v as usize]);
        extend(g, colors, &parent_pos, &mut image, &mut used, 1, mask, &mut total);
        used[v as usize] = false;
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn extend(
    g: &Graph,
    colors: Option<&[u8]>,
    parent_pos: &[Option<usize>],
    image: &mut [VertexId],
    used: &mut [bool],
    depth: usize,
    color_mask: u64,
    total: &mut u64,
) {
    if depth == image.len() {
        *total += 1;
        return;
    }
    let anchor = image[parent_pos[depth].expect("non-root has a parent")];
    for &u in g.neighbors(anchor) {
        if used[u as usize] {
            continue;
        }
        let mut mask = color_mask;
        if let Some(c) = colors {
            let bit = 1u64 << c[u as usize];
            if mask & bit != 0 {
                continue;
            }
            mask |= bit;
        }
        image[depth] = u;
        used[u as usize] = true;
        extend(g, colors, parent_pos, image, used, depth + 1, mask, total);
        used[u as usize] = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::template::RootChoice;

    fn triangle() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap().0
    }

    #[test]
    fn edges_of_triangle() {
        assert_eq!(count_embeddings_exact(&triangle(), &Template::path(2)).unwrap(), 3);
    }

    #[test]
    fn paths_of_three_in_triangle() {
        assert_eq!(count_embeddings_exact(&triangle(), &Template::path(3)).unwrap(), 3);
    }

    #[test]
    fn edgeless_graph_has_none() {
        assert_eq!(count_embeddings_exact(&Graph::empty(5), &Template::star(2)).unwrap(), 0);
    }

    #[test]
    fn colorful_edges_of_triangle() {
        let c = Coloring::from_colors(2, vec![0, 1, 1]).unwrap();
        assert_eq!(count_colorful_exact(&triangle(), &Template::path(2), &c).unwrap(), 2);
    }

    #[test]
    fn monochrome_has_no_colorful() {
        let c = Coloring::from_colors(3, vec![0, 0, 0]).unwrap();
        assert_eq!(count_colorful_exact(&triangle(), &Template::path(3), &c).unwrap(), 0);
    }

    #[test]
    fn rainbow_clique_star() {
        // K4 with a 3-leaf star: 4 centers, each with one choice of leaves.
        let edges = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let g = Graph::from_edges(4, &edges).unwrap().0;
        let c = Coloring::from_colors(4, vec![0, 1, 2, 3]).unwrap();
        let t = Template::star(3);
        let all = count_embeddings_exact(&g, &t).unwrap();
        assert_eq!(all, 4);
        assert_eq!(count_colorful_exact(&g, &t, &c).unwrap(), all);
    }

    #[test]
    fn automorphism_counts() {
        assert_eq!(automorphisms(&Template::path(2)), 2);
        assert_eq!(automorphisms(&Template::path(4)), 2);
        assert_eq!(automorphisms(&Template::star(3)), 6);
        let single = Template::new(1, &[], RootChoice::First).unwrap();
        assert_eq!(automorphisms(&single), 1);
    }

    #[test]
    fn size_guard() {
        let err = count_embeddings_exact(&Graph::empty(51), &Template::path(2)).unwrap_err();
        assert!(matches!(err, Error::SizeGuard(_)));
        let err = count_embeddings_exact(&triangle(), &Template::path(8)).unwrap_err();
        assert!(matches!(err, Error::SizeGuard(_)));
    }
}
