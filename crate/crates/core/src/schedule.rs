//! Ring-ordered exchange steps, per-pair request sets and mode selection.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::graph::{Graph, VertexId};
use crate::partition::Partition;
use crate::{Error, Result};

/// `W = P - 1` steps; at step `w` worker `p` sends to `p + w` and receives
/// from `p - w` (mod P).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RingSchedule {
    n_workers: usize,
}

impl RingSchedule {
    pub fn new(n_workers: usize) -> Result<RingSchedule> {
        if n_workers < 2 {
            return Err(Error::invalid("a ring schedule needs at least 2 workers"));
        }
        Ok(RingSchedule { n_workers })
    }

    pub fn n_workers(&self) -> usize {
        self.n_workers
    }

    pub fn n_steps(&self) -> usize {
        self.n_workers - 1
    }

    /// Steps are numbered from 1.
    pub fn send_to(&self, worker: usize, step: usize) -> usize {
        debug_assert!((1..self.n_workers).contains(&step));
        (worker + step) % self.n_workers
    }

    pub fn recv_from(&self, worker: usize, step: usize) -> usize {
        debug_assert!((1..self.n_workers).contains(&step));
        (worker + self.n_workers - step) % self.n_workers
    }

    /// `(sender, receiver)` pairs active at `step`.
    pub fn pairs(&self, step: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_workers).map(move |p| (p, self.send_to(p, step)))
    }
}

/// For every ordered worker pair `(p, q)`, the vertices owned by `p` that
/// are neighbors of some vertex owned by `q`, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExchangePlan {
    n_workers: usize,
    // requests[p * P + q]
    requests: Vec<Vec<VertexId>>,
}

impl ExchangePlan {
    pub fn build(g: &Graph, part: &Partition) -> ExchangePlan {
        let p_count = part.n_workers();
        let mut requests = vec![Vec::new(); p_count * p_count];
        for q in 0..p_count {
            for &u in part.local_vertices(q) {
                for &v in g.neighbors(u) {
                    let p = part.owner(v);
                    if p != q {
                        requests[p * p_count + q].push(v);
                    }
                }
            }
        }
        for list in &mut requests {
            list.sort_unstable();
            list.dedup();
        }
        ExchangePlan {
            n_workers: p_count,
            requests,
        }
    }

    pub fn n_workers(&self) -> usize {
        self.n_workers
    }

    /// Rows `sender` must ship to `receiver`.
    pub fn requests(&self, sender: usize, receiver: usize) -> &[VertexId] {
        &self.requests[sender * self.n_workers + receiver]
    }

    pub fn total_requests(&self) -> usize {
        self.requests.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total_requests() == 0
    }
}

/// Splits one step's payload into `segments` id ranges holding
/// near-equal numbers of the rows actually sent (`sent`, ascending), larger
/// pieces first. The ranges tile `0..u64::MAX`.
pub fn segment_ranges(sent: &[VertexId], segments: usize) -> Vec<Range<u64>> {
    let segments = segments.max(1);
    let n = sent.len();
    let (base, extra) = (n / segments, n % segments);
    let mut bounds = Vec::with_capacity(segments + 1);
    bounds.push(0);
    let mut idx = 0;
    for s in 1..segments {
        idx += base + usize::from(s - 1 < extra);
        bounds.push(sent.get(idx).map_or(u64::MAX, |&v| v as u64));
    }
    bounds.push(u64::MAX);
    bounds.windows(2).map(|w| w[0]..w[1]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    AllToAll,
    Pipeline,
}

pub const DEFAULT_ADAPTIVE_THRESHOLD: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModePolicy {
    Naive,
    Pipeline,
    /// Pipeline when a sub-template's computation intensity reaches the
    /// threshold, all-to-all otherwise.
    Adaptive { threshold: f64 },
}

impl Default for ModePolicy {
    fn default() -> Self {
        ModePolicy::Adaptive {
            threshold: DEFAULT_ADAPTIVE_THRESHOLD,
        }
    }
}

pub fn select_mode(policy: ModePolicy, entry_size: usize, intensity: f64) -> Mode {
    match policy {
        ModePolicy::Naive => Mode::AllToAll,
        ModePolicy::Pipeline => Mode::Pipeline,
        ModePolicy::Adaptive { .. } if entry_size < 2 => Mode::AllToAll,
        ModePolicy::Adaptive { threshold } if intensity >= threshold => Mode::Pipeline,
        ModePolicy::Adaptive { .. } => Mode::AllToAll,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_workers_first_step() {
        let s = RingSchedule::new(5).unwrap();
        assert_eq!(s.send_to(0, 1), 1);
        assert_eq!(s.recv_from(0, 1), 4);
    }

    #[test]
    fn two_workers_single_step() {
        let s = RingSchedule::new(2).unwrap();
        assert_eq!(s.n_steps(), 1);
        assert_eq!(s.pairs(1).collect::<Vec<_>>(), [(0, 1), (1, 0)]);
        assert!(RingSchedule::new(1).is_err());
    }

    #[test]
    fn send_and_receive_agree() {
        let s = RingSchedule::new(7).unwrap();
        for w in 1..7 {
            for p in 0..7 {
                assert_eq!(s.recv_from(s.send_to(p, w), w), p);
            }
        }
    }

    #[test]
    fn path_requests() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap().0;
        let part = Partition::with_owners(2, &[0, 1, 0]).unwrap();
        let plan = ExchangePlan::build(&g, &part);
        assert_eq!(plan.requests(1, 0), &[1]);
        assert_eq!(plan.requests(0, 1), &[0, 2]);
    }

    #[test]
    fn single_worker_plan_is_empty() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap().0;
        let part = Partition::random(&g, 1, 0).unwrap();
        assert!(ExchangePlan::build(&g, &part).is_empty());
    }

    #[test]
    fn segments_balance_rows() {
        let sent = [2, 5, 8, 9, 20];
        assert_eq!(segment_ranges(&sent, 2), [0..9, 9..u64::MAX]);
        assert_eq!(segment_ranges(&sent, 1), vec![0..u64::MAX]);
        assert_eq!(segment_ranges(&[4], 3), [0..u64::MAX, u64::MAX..u64::MAX, u64::MAX..u64::MAX]);
        assert_eq!(segment_ranges(&[], 2), [0..u64::MAX, u64::MAX..u64::MAX]);
    }

    #[test]
    fn modes() {
        assert_eq!(select_mode(ModePolicy::Naive, 12, 100.0), Mode::AllToAll);
        assert_eq!(select_mode(ModePolicy::Pipeline, 1, 0.0), Mode::Pipeline);
        let adaptive = ModePolicy::default();
        assert_eq!(select_mode(adaptive, 1, 100.0), Mode::AllToAll);
        assert_eq!(select_mode(adaptive, 12, 12.1), Mode::Pipeline);
        assert_eq!(select_mode(adaptive, 5, 2.8), Mode::AllToAll);
    }
}
