//! Template cost metrics and the per-step Hockney cost prediction.
//!
//! Memory is `sum_i C(k, |T_i|)` and computation is
//! `sum_i C(k, |T_i|) * C(|T_i|, |T'_i|)` over a chosen set of plan
//! entries; intensity is their ratio.

use alloc::vec::Vec;

use crate::graph::Graph;
use crate::plan::TemplatePlan;
use crate::subset::binomial;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Selection {
    #[default]
    All,
    NonLeaf,
    NonLeafNonRoot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Counting {
    /// Each deduplicated entry once.
    #[default]
    Distinct,
    /// Each entry as often as it occurs in the undeduplicated recursion.
    Occurrences,
}

/// Which plan entries enter the cost sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IndexSet {
    pub selection: Selection,
    pub counting: Counting,
}

impl IndexSet {
    pub const fn new(selection: Selection, counting: Counting) -> IndexSet {
        IndexSet {
            selection,
            counting,
        }
    }

    pub fn all_variants() -> Vec<IndexSet> {
        let mut out = Vec::new();
        for selection in [Selection::All, Selection::NonLeaf, Selection::NonLeafNonRoot] {
            for counting in [Counting::Distinct, Counting::Occurrences] {
                out.push(IndexSet::new(selection, counting));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    pub memory: u64,
    pub computation: u64,
    pub index_set: IndexSet,
}

impl CostModel {
    /// `computation / memory`, 0 when nothing was summed.
    pub fn intensity(&self) -> f64 {
        if self.memory == 0 {
            0.0
        } else {
            self.computation as f64 / self.memory as f64
        }
    }
}

pub fn cost_metrics(plan: &TemplatePlan, k: usize, index_set: IndexSet) -> CostModel {
    cost_metrics_from(plan, k, plan.root_entry(), index_set)
}

/// Cost of the sub-plan reached from `start`, with `start` as its root.
pub fn cost_metrics_from(
    plan: &TemplatePlan,
    k: usize,
    start: usize,
    index_set: IndexSet,
) -> CostModel {
    let occ = plan.occurrences_from(start);
    let mut memory = 0u64;
    let mut computation = 0u64;
    for (i, &n) in occ.iter().enumerate() {
        if n == 0 {
            continue;
        }
        let e = plan.entry(i);
        let keep = match index_set.selection {
            Selection::All => true,
            Selection::NonLeaf => !e.is_leaf(),
            Selection::NonLeafNonRoot => !e.is_leaf() && i != start,
        };
        if !keep {
            continue;
        }
        let times = match index_set.counting {
            Counting::Distinct => 1,
            Counting::Occurrences => n as u64,
        };
        let mem = binomial(k, e.size);
        let splits = plan.active_size(i).map_or(0, |a| binomial(e.size, a));
        memory += times * mem;
        computation += times * mem * splits;
    }
    CostModel {
        memory,
        computation,
        index_set,
    }
}

/// A template plan with its reference memory and computation figures.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceCost<'a> {
    pub plan: &'a TemplatePlan,
    pub memory: f64,
    pub computation: f64,
}

/// Index set minimizing the summed squared log-error of memory and
/// computation against the references; returns it with its error.
pub fn calibrate_index_set(references: &[ReferenceCost<'_>]) -> Result<(IndexSet, f64)> {
    if references.is_empty() {
        return Err(Error::invalid("calibration needs at least one reference"));
    }
    let log_err = |model: f64, reference: f64| {
        let d = libm::log(model.max(0.5)) - libm::log(reference.max(0.5));
        d * d
    };
    let mut best: Option<(IndexSet, f64)> = None;
    for set in IndexSet::all_variants() {
        let err: f64 = references
            .iter()
            .map(|r| {
                let c = cost_metrics(r.plan, r.plan.k(), set);
                log_err(c.memory as f64, r.memory) + log_err(c.computation as f64, r.computation)
            })
            .sum();
        if best.is_none_or(|(_, e)| err < e) {
            best = Some((set, err));
        }
    }
    Ok(best.expect("at least one variant"))
}

/// Latency plus inverse bandwidth: a message of `b` bytes costs
/// `alpha + beta * b` seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HockneyParams {
    pub alpha: f64,
    pub beta: f64,
}

impl HockneyParams {
    pub fn new(alpha: f64, beta: f64) -> Result<HockneyParams> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::invalid("alpha must be a finite value >= 0"));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::invalid("beta must be a finite value > 0"));
        }
        Ok(HockneyParams { alpha, beta })
    }

    pub fn time(&self, bytes: f64) -> f64 {
        self.alpha + self.beta * bytes
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphStats {
    pub n_vertices: f64,
    /// Directed adjacency entries, twice the undirected edge count.
    pub n_adjacency_entries: f64,
}

impl GraphStats {
    pub fn of(g: &Graph) -> GraphStats {
        GraphStats {
            n_vertices: g.n_vertices() as f64,
            n_adjacency_entries: g.n_adjacency_entries() as f64,
        }
    }
}

/// Predicted figures for one exchange step of one non-leaf sub-template.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPrediction {
    pub entry: usize,
    /// Expected remote neighbor entries per worker pair, `|E| / P^2`.
    pub remote_volume: f64,
    /// Multiply-adds: `C(k,|T_i|) * C(|T_i|,|T'_i|) * |E| / P^2`.
    pub computation: f64,
    /// Seconds: `alpha + wait + beta * C(k,|T_i|) * |E| / P^2 * 8`.
    pub communication: f64,
    /// Bytes: `C(k,|T_i|) * (|V| / P + |E| / P^2) * 8`.
    pub peak_memory: f64,
}

pub const VALUE_BYTES: f64 = 8.0;

pub fn predict_costs(
    plan: &TemplatePlan,
    stats: GraphStats,
    n_workers: usize,
    params: HockneyParams,
    straggler_wait: f64,
) -> Result<Vec<StepPrediction>> {
    if n_workers == 0 {
        return Err(Error::invalid("worker count must be at least 1"));
    }
    let p = n_workers as f64;
    let volume = stats.n_adjacency_entries / (p * p);
    let k = plan.k();
    Ok((0..plan.entries().len())
        .filter_map(|i| {
            let a = plan.active_size(i)?;
            let size = plan.entry(i).size;
            let row = binomial(k, size) as f64;
            Some(StepPrediction {
                entry: i,
                remote_volume: volume,
                computation: row * binomial(size, a) as f64 * volume,
                communication: params.alpha
                    + straggler_wait
                    + params.beta * row * volume * VALUE_BYTES,
                peak_memory: row * (stats.n_vertices / p + volume) * VALUE_BYTES,
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::{partition_template, CutPolicy};
    use crate::template::{RootChoice, Template};

    fn plan(t: &Template) -> TemplatePlan {
        partition_template(t, CutPolicy::default())
    }

    #[test]
    fn single_vertex() {
        let p = plan(&Template::new(1, &[], RootChoice::First).unwrap());
        let c = cost_metrics(&p, 1, IndexSet::default());
        assert_eq!((c.memory, c.computation), (1, 0));
    }

    #[test]
    fn path_of_three_reference_convention() {
        // Only the size-2 entry survives non-leaf non-root selection:
        // C(3,2) = 3 memory and 3 * C(2,1) = 6 computation.
        let p = plan(&Template::path(3));
        let set = IndexSet::new(Selection::NonLeafNonRoot, Counting::Occurrences);
        let c = cost_metrics(&p, 3, set);
        assert_eq!((c.memory, c.computation), (3, 6));
        assert_eq!(c.intensity(), 2.0);
    }

    #[test]
    fn monotone_in_k() {
        let p = plan(&Template::star(3));
        for set in IndexSet::all_variants() {
            let mut last = (0, 0);
            for k in 4..12 {
                let c = cost_metrics(&p, k, set);
                assert!(c.memory >= last.0 && c.computation >= last.1);
                last = (c.memory, c.computation);
            }
        }
    }

    #[test]
    fn hockney_validation() {
        assert!(HockneyParams::new(0.0, 1e-9).is_ok());
        assert!(HockneyParams::new(-1.0, 1e-9).is_err());
        assert!(HockneyParams::new(0.0, 0.0).is_err());
    }

    #[test]
    fn remote_volume_quarter_per_doubling() {
        let p = plan(&Template::path(4));
        let stats = GraphStats {
            n_vertices: 1000.0,
            n_adjacency_entries: 8000.0,
        };
        let h = HockneyParams::new(1e-6, 1e-9).unwrap();
        let two = predict_costs(&p, stats, 2, h, 0.0).unwrap();
        let four = predict_costs(&p, stats, 4, h, 0.0).unwrap();
        assert_eq!(two[0].remote_volume, 2000.0);
        assert_eq!(four[0].remote_volume, 500.0);
        assert!(four[0].peak_memory < two[0].peak_memory);
    }

    #[test]
    fn full_subset_row_is_one_value() {
        let p = plan(&Template::path(3));
        let stats = GraphStats {
            n_vertices: 10.0,
            n_adjacency_entries: 40.0,
        };
        let h = HockneyParams::new(0.0, 1.0).unwrap();
        let pred = predict_costs(&p, stats, 2, h, 0.0).unwrap();
        let root = pred.iter().find(|s| s.entry == 0).unwrap();
        assert_eq!(root.communication, 10.0 * VALUE_BYTES);
    }
}
