//! Recursive partition of a rooted tree template into sub-templates.
//!
//! Every non-leaf sub-template `T_i` rooted at `r` is split by cutting the
//! edge from `r` to one of its children `c`: the active child keeps `r` and
//! everything except the subtree of `c`, the passive child is that subtree
//! rooted at `c`. Sub-templates with equal canonical codes share one entry.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::template::{Template, VertexMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CutPolicy {
    /// Cut the child whose canonical code sorts first (ties by size).
    #[default]
    CanonicalFirst,
    /// Cut the smallest child subtree (ties by canonical code).
    SmallestChild,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubTemplate {
    pub size: usize,
    /// Template vertex this sub-template is rooted at.
    pub root: usize,
    /// Template vertices of the first occurrence that created this entry.
    pub mask: VertexMask,
    /// Plan index of the active child (rooted like this entry; a shared
    /// entry may record a different but equivalent template vertex).
    pub active: Option<usize>,
    /// Plan index of the passive child (rooted at the cut neighbor).
    pub passive: Option<usize>,
    pub over_count: u32,
    pub code: String,
    /// How often this rooted shape occurs in the recursion before
    /// deduplication.
    pub occurrences: usize,
}

impl SubTemplate {
    pub fn is_leaf(&self) -> bool {
        self.active.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct TemplatePlan {
    template: Template,
    entries: Vec<SubTemplate>,
    order: Vec<usize>,
    root_orbit: usize,
}

impl TemplatePlan {
    pub fn template(&self) -> &Template {
        &self.template
    }

    /// Number of colors, `k = |V_T|`.
    pub fn k(&self) -> usize {
        self.template.n_vertices()
    }

    /// Entries in creation order; entry 0 is the full template.
    pub fn entries(&self) -> &[SubTemplate] {
        &self.entries
    }

    pub fn entry(&self, i: usize) -> &SubTemplate {
        &self.entries[i]
    }

    pub fn root_entry(&self) -> usize {
        0
    }

    /// Entry indices with every child before its parent.
    pub fn evaluation_order(&self) -> &[usize] {
        &self.order
    }

    /// Number of template vertices whose rooted shape equals the root's,
    /// i.e. the orbit of the root under template automorphisms. Summing the
    /// root counts over all graph vertices counts each copy this many times.
    pub fn root_orbit(&self) -> usize {
        self.root_orbit
    }

    /// Size of the active child of `i`, if `i` is not a leaf.
    pub fn active_size(&self, i: usize) -> Option<usize> {
        self.entries[i].active.map(|a| self.entries[a].size)
    }

    /// Occurrence counts of every entry in the undeduplicated recursion that
    /// starts at `start`.
    pub fn occurrences_from(&self, start: usize) -> Vec<usize> {
        let mut occ = vec![0usize; self.entries.len()];
        occ[start] = 1;
        for &e in self.order.iter().rev() {
            if occ[e] == 0 {
                continue;
            }
            if let (Some(a), Some(p)) = (self.entries[e].active, self.entries[e].passive) {
                occ[a] += occ[e];
                occ[p] += occ[e];
            }
        }
        occ
    }

    /// Number of times each entry's table is read as a child.
    pub fn consumer_counts(&self) -> Vec<usize> {
        let mut uses = vec![0usize; self.entries.len()];
        for e in &self.entries {
            if let (Some(a), Some(p)) = (e.active, e.passive) {
                uses[a] += 1;
                uses[p] += 1;
            }
        }
        uses
    }
}

pub fn partition_template(t: &Template, policy: CutPolicy) -> TemplatePlan {
    let mut builder = Builder {
        t,
        policy,
        entries: Vec::new(),
        by_code: BTreeMap::new(),
    };
    builder.build(t.full_mask(), t.root());
    let mut entries = builder.entries;

    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by_key(|&i| (entries[i].size, i));

    let root_code = t.canonical_rooted_form(t.root());
    let root_orbit = (0..t.n_vertices())
        .filter(|&x| t.canonical_rooted_form(x) == root_code)
        .count();

    let mut plan = TemplatePlan {
        template: t.clone(),
        entries: Vec::new(),
        order,
        root_orbit,
    };
    core::mem::swap(&mut plan.entries, &mut entries);
    let occ = plan.occurrences_from(0);
    for (e, n) in plan.entries.iter_mut().zip(occ) {
        e.occurrences = n;
    }
    plan
}

/// Number of children subtrees of `entry`'s root whose rooted shape equals
/// the passive child's. Leaves have factor 1.
pub fn over_count_factor(plan: &TemplatePlan, entry: usize) -> u32 {
    let e = plan.entry(entry);
    let Some(p) = e.passive else { return 1 };
    let passive_code = &plan.entry(p).code;
    let t = plan.template();
    t.children_within(e.mask, e.root, usize::MAX)
        .filter(|&c| &t.code_within(e.mask, c, e.root) == passive_code)
        .count() as u32
}

struct Builder<'a> {
    t: &'a Template,
    policy: CutPolicy,
    entries: Vec<SubTemplate>,
    by_code: BTreeMap<String, usize>,
}

impl Builder<'_> {
    fn build(&mut self, mask: VertexMask, root: usize) -> usize {
        let code = self.t.code_within(mask, root, usize::MAX);
        if let Some(&i) = self.by_code.get(&code) {
            return i;
        }
        let idx = self.entries.len();
        self.by_code.insert(code.clone(), idx);
        self.entries.push(SubTemplate {
            size: mask.count_ones() as usize,
            root,
            mask,
            active: None,
            passive: None,
            over_count: 1,
            code,
            occurrences: 0,
        });
        if mask.count_ones() == 1 {
            return idx;
        }

        let mut children: Vec<(String, u32, usize)> = self
            .t
            .children_within(mask, root, usize::MAX)
            .map(|c| {
                let sub = self.t.subtree_mask(mask, c, root);
                (self.t.code_within(mask, c, root), sub.count_ones(), c)
            })
            .collect();
        match self.policy {
            CutPolicy::CanonicalFirst => children.sort_by(|x, y| (&x.0, x.1).cmp(&(&y.0, y.1))),
            CutPolicy::SmallestChild => children.sort_by(|x, y| (x.1, &x.0).cmp(&(y.1, &y.0))),
        }
        let (cut_code, _, cut) = children[0].clone();
        let d = children.iter().filter(|c| c.0 == cut_code).count() as u32;

        let passive_mask = self.t.subtree_mask(mask, cut, root);
        let active = self.build(mask & !passive_mask, root);
        let passive = self.build(passive_mask, cut);
        let e = &mut self.entries[idx];
        e.active = Some(active);
        e.passive = Some(passive);
        e.over_count = d;
        idx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::template::RootChoice;

    fn check_invariants(plan: &TemplatePlan) {
        assert_eq!(plan.entry(0).size, plan.k());
        let pos: Vec<usize> = {
            let mut pos = vec![0; plan.entries().len()];
            for (i, &e) in plan.evaluation_order().iter().enumerate() {
                pos[e] = i;
            }
            pos
        };
        for (i, e) in plan.entries().iter().enumerate() {
            match (e.active, e.passive) {
                (Some(a), Some(p)) => {
                    assert_eq!(e.size, plan.entry(a).size + plan.entry(p).size);
                    assert!(pos[a] < pos[i] && pos[p] < pos[i]);
                    assert!(e.over_count >= 1);
                    assert_eq!(e.over_count, over_count_factor(plan, i));
                }
                (None, None) => assert_eq!(e.size, 1),
                _ => unreachable!(),
            }
            if e.size <= 2 {
                assert_eq!(e.over_count, 1);
            }
        }
    }

    #[test]
    fn single_vertex_plan() {
        let t = Template::new(1, &[], RootChoice::First).unwrap();
        let plan = partition_template(&t, CutPolicy::default());
        assert_eq!(plan.entries().len(), 1);
        assert!(plan.entry(0).is_leaf());
        assert_eq!(plan.root_orbit(), 1);
    }

    #[test]
    fn edge_plan() {
        let plan = partition_template(&Template::path(2), CutPolicy::default());
        let sizes: Vec<_> = plan.entries().iter().map(|e| e.size).collect();
        assert_eq!(sizes, [2, 1]);
        assert_eq!(plan.active_size(0), Some(1));
        assert_eq!(plan.entry(plan.entry(0).passive.unwrap()).size, 1);
        assert_eq!(plan.root_orbit(), 2);
        check_invariants(&plan);
    }

    #[test]
    fn two_leaf_root_overcounts_twice() {
        let t = Template::new(3, &[(0, 1), (0, 2)], RootChoice::First).unwrap();
        let plan = partition_template(&t, CutPolicy::default());
        assert_eq!(plan.entry(0).over_count, 2);
        check_invariants(&plan);
    }

    #[test]
    fn end_rooted_path_has_unit_factors() {
        let plan = partition_template(&Template::path(5), CutPolicy::default());
        assert!(plan.entries().iter().all(|e| e.over_count == 1));
        assert_eq!(plan.root_orbit(), 2);
        check_invariants(&plan);
    }

    #[test]
    fn three_leaves_overcount_three_times() {
        let plan = partition_template(&Template::star(3), CutPolicy::default());
        assert_eq!(plan.entry(0).over_count, 3);
        check_invariants(&plan);
    }

    #[test]
    fn five_vertex_split_into_two_and_three() {
        // Root 0 with an edge child (0-1) and a cherry child (2; 3, 4):
        // the canonical cut takes the cherry, leaving T' = {0, 1}.
        let t = Template::new(5, &[(0, 1), (0, 2), (2, 3), (2, 4)], RootChoice::First).unwrap();
        let plan = partition_template(&t, CutPolicy::CanonicalFirst);
        let root = plan.entry(0);
        let (a, p) = (root.active.unwrap(), root.passive.unwrap());
        assert_eq!((plan.entry(a).size, plan.entry(p).size), (2, 3));
        assert_eq!(plan.entry(p).root, 2);
        assert_eq!(plan.entry(p).over_count, 2);
        check_invariants(&plan);
    }

    #[test]
    fn isomorphic_subtemplates_are_shared() {
        // Star rooted at the center: every size-1 piece is the same entry.
        let plan = partition_template(&Template::star(4), CutPolicy::default());
        let leaves = plan.entries().iter().filter(|e| e.is_leaf()).count();
        assert_eq!(leaves, 1);
        let occ = plan.occurrences_from(0);
        let leaf = plan.entries().iter().position(|e| e.is_leaf()).unwrap();
        // Undeduplicated recursion of a 5-vertex tree has 5 single-vertex leaves.
        assert_eq!(occ[leaf], 5);
        check_invariants(&plan);
    }

    #[test]
    fn smallest_child_policy_is_valid() {
        let t = Template::new(6, &[(0, 1), (1, 2), (0, 3), (3, 4), (3, 5)], RootChoice::First)
            .unwrap();
        for policy in [CutPolicy::CanonicalFirst, CutPolicy::SmallestChild] {
            check_invariants(&partition_template(&t, policy));
        }
    }
}
