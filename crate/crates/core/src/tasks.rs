//! Neighbor-list partitioning into bounded tasks.

use alloc::vec::Vec;
use core::ops::Range;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::Csr;
use crate::{Error, Result};

/// Neighbors `entries()[start..end]` of the list in row `row`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Task {
    pub row: u32,
    pub start: u32,
    pub end: u32,
}

impl Task {
    pub fn len(&self) -> usize {
        (self.end - self.start) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn range(&self) -> Range<usize> {
        self.start as usize..self.end as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskQueue {
    tasks: Vec<Task>,
    max_size: usize,
}

/// Splits every row of `lists` into tasks of at most `max_size` neighbors
/// and shuffles the queue with `seed`.
///
/// A list shorter than `max_size` becomes one task (even when empty); a
/// longer list is cut front to back into `max_size` pieces plus a remainder.
pub fn build_task_queue(lists: &Csr, max_size: usize, seed: u64) -> Result<TaskQueue> {
    build_task_queue_within(lists, ALL_IDS, max_size, seed)
}

/// Every vertex id.
pub const ALL_IDS: Range<u64> = 0..u64::MAX;

/// As [`build_task_queue`], with each (sorted) list first narrowed to the
/// neighbors whose ids fall in `ids`.
pub fn build_task_queue_within(
    lists: &Csr,
    ids: Range<u64>,
    max_size: usize,
    seed: u64,
) -> Result<TaskQueue> {
    if max_size == 0 {
        return Err(Error::invalid("task size must be at least 1"));
    }
    let mut tasks = Vec::with_capacity(lists.n_rows());
    for row in 0..lists.n_rows() {
        let (start, mut n) = span(lists, row, &ids);
        if n < max_size {
            tasks.push(task(row, start, n));
            continue;
        }
        let mut pos = start;
        while n > 0 {
            let l = n.min(max_size);
            tasks.push(task(row, pos, l));
            pos += l;
            n -= l;
        }
    }
    tasks.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(TaskQueue { tasks, max_size })
}

fn span(lists: &Csr, row: usize, ids: &Range<u64>) -> (usize, usize) {
    let list = lists.row(row);
    if *ids == ALL_IDS {
        return (lists.row_start(row), list.len());
    }
    let lo = list.partition_point(|&u| (u as u64) < ids.start);
    let hi = list.partition_point(|&u| (u as u64) < ids.end);
    (lists.row_start(row) + lo, hi - lo)
}

fn task(row: usize, start: usize, len: usize) -> Task {
    Task {
        row: row as u32,
        start: start as u32,
        end: (start + len) as u32,
    }
}

impl TaskQueue {
    /// One task per row holding its whole list, in row order.
    pub fn per_vertex(lists: &Csr) -> TaskQueue {
        Self::per_vertex_within(lists, ALL_IDS)
    }

    pub fn per_vertex_within(lists: &Csr, ids: Range<u64>) -> TaskQueue {
        let tasks = (0..lists.n_rows())
            .map(|row| {
                let (start, len) = span(lists, row, &ids);
                task(row, start, len)
            })
            .collect::<Vec<_>>();
        let max_size = tasks.iter().map(Task::len).max().unwrap_or(0);
        TaskQueue { tasks, max_size }
    }

    /// Drops tasks with no neighbors.
    pub fn without_empty(mut self) -> TaskQueue {
        self.tasks.retain(|t| !t.is_empty());
        self
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    /// Contiguous block of task indices for `lane` out of `lanes`.
    pub fn static_block(&self, lane: usize, lanes: usize) -> Range<usize> {
        let n = self.tasks.len();
        let base = n / lanes;
        let extra = n % lanes;
        let start = lane * base + lane.min(extra);
        start..start + base + usize::from(lane < extra)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn lists(lens: &[usize]) -> Csr {
        Csr::from_lists(lens.iter().map(|&n| (0..n as u32).collect::<Vec<_>>()))
    }

    #[test]
    fn long_list_splits() {
        let q = build_task_queue(&lists(&[120]), 50, 1).unwrap();
        let mut sizes: Vec<_> = q.tasks().iter().map(|t| (t.start, t.len())).collect();
        sizes.sort();
        assert_eq!(sizes, [(0, 50), (50, 50), (100, 20)]);
    }

    #[test]
    fn short_list_is_one_task() {
        let q = build_task_queue(&lists(&[10]), 50, 1).unwrap();
        assert_eq!(q.tasks(), &[Task { row: 0, start: 0, end: 10 }]);
    }

    #[test]
    fn one_task_per_vertex_when_degrees_small() {
        let q = build_task_queue(&lists(&[3, 0, 7, 1]), 8, 9).unwrap();
        assert_eq!(q.len(), 4);
        assert_eq!(q.clone().without_empty().len(), 3);
    }

    #[test]
    fn zero_task_size_rejected() {
        assert!(build_task_queue(&lists(&[1]), 0, 1).is_err());
    }

    #[test]
    fn narrowed_lists() {
        let lists = Csr::from_lists([vec![1u32, 4, 6, 9], vec![2, 3]]);
        let q = TaskQueue::per_vertex_within(&lists, 3..7);
        assert_eq!(q.tasks(), &[Task { row: 0, start: 1, end: 3 }, Task { row: 1, start: 5, end: 6 }]);
        let q = build_task_queue_within(&lists, 5..u64::MAX, 1, 0).unwrap();
        assert_eq!(q.clone().without_empty().len(), 2);
    }

    #[test]
    fn static_blocks_cover() {
        let q = TaskQueue::per_vertex(&lists(&[1; 10]));
        let blocks: Vec<_> = (0..3).map(|l| q.static_block(l, 3)).collect();
        assert_eq!(blocks, [0..4, 4..7, 7..10]);
    }
}
