//! The counting recurrence.
//!
//! For a non-leaf sub-template `T_i` split into `T'_i` (active) and `T''_i`
//! (passive), the row of vertex `v` is
//!
//! ```text
//! C(v, T_i, S) = 1/d * sum_{u in N(v)} sum_{S1 + S2 = S, |S1| = |T'_i|} C(v, T'_i, S1) * C(u, T''_i, S2)
//! ```
//!
//! The sum over `u` is split into tasks over sub-lists of `N(v)`; each task
//! produces a partial row that is added into the output table, and the
//! division by `d` happens once when the table is finished.

use alloc::vec;
use alloc::vec::Vec;

use crate::coloring::Coloring;
use crate::graph::{Graph, VertexId};
use crate::partition::Partition;
use crate::plan::TemplatePlan;
use crate::subset::{binomial, SplitTable, SubsetIndex};
use crate::table::CountTable;
use crate::{Error, Result};

/// Where passive-child rows of neighbors come from.
pub trait RowSource {
    /// `Ok(None)` means the row is known to be all zeros.
    fn row(&self, u: VertexId) -> Result<Option<&[f64]>>;
}

/// Rows of vertices owned by this worker.
pub struct LocalRows<'a> {
    table: &'a CountTable,
    part: &'a Partition,
}

impl<'a> LocalRows<'a> {
    pub fn new(table: &'a CountTable, part: &'a Partition) -> Self {
        LocalRows { table, part }
    }
}

impl RowSource for LocalRows<'_> {
    #[inline]
    fn row(&self, u: VertexId) -> Result<Option<&[f64]>> {
        Ok(Some(self.table.row(self.part.local_slot(u))))
    }
}

/// Whole-graph table indexed directly by vertex id (single worker).
impl RowSource for CountTable {
    #[inline]
    fn row(&self, u: VertexId) -> Result<Option<&[f64]>> {
        Ok(Some(CountTable::row(self, u as usize)))
    }
}

/// Passive-child rows received from one sender for one exchange step.
///
/// `expected` is the sender's request set from the exchange plan. Rows that
/// were all zeros are elided on the wire and read back as zero; asking for a
/// vertex outside `expected` is a protocol error.
#[derive(Debug, Clone)]
pub struct RemoteRows {
    row_len: usize,
    expected: Vec<VertexId>,
    ids: Vec<VertexId>,
    data: Vec<f64>,
}

impl RemoteRows {
    pub fn new(expected: &[VertexId], row_len: usize) -> RemoteRows {
        RemoteRows {
            row_len,
            expected: expected.to_vec(),
            ids: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn row_len(&self) -> usize {
        self.row_len
    }

    /// Appends a zeroed row for `vertex` and returns it for decoding into.
    /// Rows must arrive in ascending vertex order.
    pub fn push_row(&mut self, vertex: VertexId) -> Result<&mut [f64]> {
        if self.expected.binary_search(&vertex).is_err() {
            return Err(Error::Codec(alloc::format!(
                "vertex {vertex} was not requested from this sender"
            )));
        }
        if self.ids.last().is_some_and(|&last| last >= vertex) {
            return Err(Error::Codec("rows out of order".into()));
        }
        self.ids.push(vertex);
        let start = self.data.len();
        self.data.resize(start + self.row_len, 0.0);
        Ok(&mut self.data[start..])
    }

    /// Rows actually stored (nonzero on the sender).
    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn n_expected(&self) -> usize {
        self.expected.len()
    }

    /// Accounted buffer size: stored rows plus their ids.
    pub fn bytes(&self) -> usize {
        self.data.len() * size_of::<f64>()
            + self.ids.len() * size_of::<VertexId>()
    }
}

impl RowSource for RemoteRows {
    #[inline]
    fn row(&self, u: VertexId) -> Result<Option<&[f64]>> {
        match self.ids.binary_search(&u) {
            Ok(i) => Ok(Some(&self.data[i * self.row_len..(i + 1) * self.row_len])),
            Err(_) if self.expected.binary_search(&u).is_ok() => Ok(None),
            Err(_) => Err(Error::MissingRow { vertex: u as u64 }),
        }
    }
}

/// Subset index and split tables for every entry of a plan.
#[derive(Debug, Clone)]
pub struct DpContext {
    plan: TemplatePlan,
    index: SubsetIndex,
    splits: Vec<Option<SplitTable>>,
}

impl DpContext {
    pub fn new(plan: TemplatePlan) -> Result<DpContext> {
        let index = SubsetIndex::new(plan.k())?;
        let splits = (0..plan.entries().len())
            .map(|i| match plan.active_size(i) {
                Some(a) => SplitTable::new(&index, plan.entry(i).size, a).map(Some),
                None => Ok(None),
            })
            .collect::<Result<_>>()?;
        Ok(DpContext {
            plan,
            index,
            splits,
        })
    }

    pub fn plan(&self) -> &TemplatePlan {
        &self.plan
    }

    pub fn k(&self) -> usize {
        self.plan.k()
    }

    pub fn subset_index(&self) -> &SubsetIndex {
        &self.index
    }

    /// Row length `C(k, |T_i|)` of entry `i`'s table.
    pub fn row_len(&self, i: usize) -> usize {
        binomial(self.plan.k(), self.plan.entry(i).size) as usize
    }

    pub fn splits(&self, i: usize) -> Option<&SplitTable> {
        self.splits[i].as_ref()
    }
}

/// Base case: row of `v` is the indicator of `{col(v)}`. The colex rank of
/// a singleton `{c}` is `c`.
pub fn init_base_counts(table: &mut CountTable, colors: impl IntoIterator<Item = u8>) {
    for (slot, c) in colors.into_iter().enumerate() {
        let row = table.row_mut(slot);
        row.fill(0.0);
        row[c as usize] = 1.0;
    }
}

/// Adds the contribution of `neighbors` to the partial row `out` of one
/// vertex whose active-child row is `active_row`.
pub fn accumulate_neighbors<S: RowSource + ?Sized>(
    splits: &SplitTable,
    active_row: &[f64],
    neighbors: &[VertexId],
    source: &S,
    out: &mut [f64],
) -> Result<()> {
    if neighbors.is_empty() || active_row.iter().all(|&a| a == 0.0) {
        // Still validate that every neighbor is resolvable.
        for &u in neighbors {
            source.row(u)?;
        }
        return Ok(());
    }
    for &u in neighbors {
        let Some(passive_row) = source.row(u)? else {
            continue;
        };
        for (s, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for &(i1, i2) in splits.row(s) {
                acc += active_row[i1 as usize] * passive_row[i2 as usize];
            }
            *o += acc;
        }
    }
    Ok(())
}

/// Sum of the full-color-set entry (rank 0) over all rows of a root table.
pub fn root_sum(table: &CountTable) -> f64 {
    (0..table.n_rows()).map(|r| table.row(r)[0]).sum()
}

/// Colorful copies of the template: the summed root counts divided by the
/// root's orbit size (each copy is found once per root-equivalent vertex).
pub fn colorful_total(raw_root_sum: f64, plan: &TemplatePlan) -> f64 {
    raw_root_sum / plan.root_orbit() as f64
}

/// Single-worker evaluation of the whole plan; returns the colorful total.
pub fn count_colorful(g: &Graph, ctx: &DpContext, coloring: &Coloring) -> Result<f64> {
    let tables = compute_tables(g, ctx, coloring)?;
    let root = tables[ctx.plan().root_entry()].as_ref().expect("root table");
    Ok(colorful_total(root_sum(root), ctx.plan()))
}

/// Single-worker evaluation returning every entry's finished table.
pub fn compute_tables(
    g: &Graph,
    ctx: &DpContext,
    coloring: &Coloring,
) -> Result<Vec<Option<CountTable>>> {
    if coloring.k() != ctx.k() {
        return Err(Error::invalid("coloring uses a different number of colors"));
    }
    if coloring.colors().len() != g.n_vertices() {
        return Err(Error::invalid("coloring does not cover the graph"));
    }
    let plan = ctx.plan();
    let n = g.n_vertices();
    let mut tables: Vec<Option<CountTable>> = vec![None; plan.entries().len()];
    for &i in plan.evaluation_order() {
        let e = plan.entry(i);
        let mut table = CountTable::zeros(n, ctx.row_len(i));
        match (e.active, e.passive, ctx.splits(i)) {
            (Some(a), Some(p), Some(splits)) => {
                let active = tables[a].as_ref().expect("child first");
                let passive = tables[p].as_ref().expect("child first");
                for v in 0..n as VertexId {
                    accumulate_neighbors(
                        splits,
                        active.row(v as usize),
                        g.neighbors(v),
                        passive,
                        table.row_mut(v as usize),
                    )?;
                }
                if e.over_count > 1 {
                    let d = e.over_count as f64;
                    for r in 0..n {
                        for x in table.row_mut(r) {
                            *x /= d;
                        }
                    }
                }
            }
            _ => init_base_counts(&mut table, coloring.colors().iter().copied()),
        }
        tables[i] = Some(table);
    }
    Ok(tables)
}
