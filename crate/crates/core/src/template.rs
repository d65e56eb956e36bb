//! Tree templates and AHU-style canonical codes for rooted subtrees.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Templates are addressed with 64-bit vertex masks.
pub const MAX_TEMPLATE_VERTICES: usize = 64;

/// Bit mask over template vertices.
pub type VertexMask = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RootChoice {
    /// Vertex 0.
    #[default]
    First,
    Vertex(usize),
    /// A vertex of minimum eccentricity (lowest id on ties).
    Center,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    n: usize,
    edges: Vec<(usize, usize)>,
    root: usize,
    adj: Vec<Vec<usize>>,
}

impl Template {
    pub fn new(n: usize, edges: &[(usize, usize)], root: RootChoice) -> Result<Template> {
        if n == 0 {
            return Err(Error::NotATree("template has no vertices".into()));
        }
        if n > MAX_TEMPLATE_VERTICES {
            return Err(Error::invalid(format!(
                "templates are limited to {MAX_TEMPLATE_VERTICES} vertices"
            )));
        }
        if edges.len() != n - 1 {
            return Err(Error::NotATree(format!(
                "{} edges on {n} vertices (a tree has {})",
                edges.len(),
                n - 1
            )));
        }
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::VertexOutOfRange {
                    vertex: a.max(b) as u64,
                    n_vertices: n,
                });
            }
            if a == b {
                return Err(Error::NotATree(format!("self-loop at {a}")));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let mut t = Template {
            n,
            edges: edges.to_vec(),
            root: 0,
            adj,
        };
        if t.eccentricities().iter().any(|e| e.is_none()) {
            return Err(Error::NotATree("template is disconnected or cyclic".into()));
        }
        t.root = t.resolve_root(root)?;
        Ok(t)
    }

    /// Path on `n` vertices rooted at one end.
    pub fn path(n: usize) -> Template {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Template::new(n, &edges, RootChoice::First).expect("path is a tree")
    }

    /// Star with `leaves` leaves rooted at its center.
    pub fn star(leaves: usize) -> Template {
        let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        Template::new(leaves + 1, &edges, RootChoice::First).expect("star is a tree")
    }

    fn resolve_root(&self, choice: RootChoice) -> Result<usize> {
        match choice {
            RootChoice::First => Ok(0),
            RootChoice::Vertex(r) if r < self.n => Ok(r),
            RootChoice::Vertex(r) => Err(Error::invalid(format!(
                "root {r} is not a template vertex"
            ))),
            RootChoice::Center => {
                let ecc = self.eccentricities();
                Ok((0..self.n).min_by_key(|&v| (ecc[v], v)).unwrap())
            }
        }
    }

    /// BFS eccentricity of every vertex; `None` when some vertex is
    /// unreachable (only possible for a non-tree with n - 1 edges).
    fn eccentricities(&self) -> Vec<Option<usize>> {
        (0..self.n)
            .map(|s| {
                let mut dist = vec![usize::MAX; self.n];
                dist[s] = 0;
                let mut queue = alloc::collections::VecDeque::from([s]);
                while let Some(x) = queue.pop_front() {
                    for &y in &self.adj[x] {
                        if dist[y] == usize::MAX {
                            dist[y] = dist[x] + 1;
                            queue.push_back(y);
                        }
                    }
                }
                if dist.contains(&usize::MAX) {
                    None
                } else {
                    dist.into_iter().max()
                }
            })
            .collect()
    }

    pub fn with_root(&self, root: RootChoice) -> Result<Template> {
        let mut t = self.clone();
        t.root = t.resolve_root(root)?;
        Ok(t)
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn neighbors(&self, x: usize) -> &[usize] {
        &self.adj[x]
    }

    pub fn full_mask(&self) -> VertexMask {
        if self.n == 64 {
            u64::MAX
        } else {
            (1u64 << self.n) - 1
        }
    }

    /// Canonical code of the whole template rooted at `root`.
    pub fn canonical_rooted_form(&self, root: usize) -> String {
        self.code_within(self.full_mask(), root, usize::MAX)
    }

    /// Canonical code of the subtree hanging from `node` (entered from
    /// `parent`), restricted to the vertices in `mask`.
    ///
    /// A vertex is `"(" + sorted child codes + ")"`; two rooted trees have
    /// equal codes exactly when they are isomorphic as rooted trees.
    pub fn code_within(&self, mask: VertexMask, node: usize, parent: usize) -> String {
        let mut children: Vec<String> = self
            .children_within(mask, node, parent)
            .map(|c| self.code_within(mask, c, node))
            .collect();
        children.sort_unstable();
        let mut code = String::with_capacity(2 + children.iter().map(String::len).sum::<usize>());
        code.push('(');
        for c in &children {
            code.push_str(c);
        }
        code.push(')');
        code
    }

    pub(crate) fn children_within(
        &self,
        mask: VertexMask,
        node: usize,
        parent: usize,
    ) -> impl Iterator<Item = usize> + '_ {
        self.adj[node]
            .iter()
            .copied()
            .filter(move |&c| c != parent && mask & (1u64 << c) != 0)
    }

    /// Vertices of the subtree hanging from `node`, entered from `parent`.
    pub(crate) fn subtree_mask(&self, mask: VertexMask, node: usize, parent: usize) -> VertexMask {
        let mut out = 1u64 << node;
        for c in self.children_within(mask, node, parent) {
            out |= self.subtree_mask(mask, c, node);
        }
        out
    }
}
