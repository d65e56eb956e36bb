//! Color subsets as bit masks, ranked in colexicographic order.
//!
//! A size-`s` subset `{c_1 < c_2 < ... < c_s}` of `{0, .., k-1}` has rank
//! `sum_i C(c_i, i)`, a bijection onto `0..C(k, s)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Color masks are `u32`.
pub const MAX_COLORS: usize = 31;

pub type ColorSet = u32;

/// `C(n, r)`, zero when `r > n`.
pub fn binomial(n: usize, r: usize) -> u64 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u64 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

/// Rank/unrank tables for subsets of `{0, .., k-1}`.
#[derive(Debug, Clone)]
pub struct SubsetIndex {
    k: usize,
    // choose[n][r] for n <= k, r <= k.
    choose: Vec<Vec<u32>>,
}

impl SubsetIndex {
    pub fn new(k: usize) -> Result<SubsetIndex> {
        if k == 0 || k > MAX_COLORS {
            return Err(Error::invalid("color count must be in 1..=31"));
        }
        let choose = (0..=k)
            .map(|n| (0..=k).map(|r| binomial(n, r) as u32).collect())
            .collect();
        Ok(SubsetIndex { k, choose })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of subsets of size `s`.
    pub fn count(&self, s: usize) -> usize {
        self.choose[self.k][s] as usize
    }

    /// Colex rank of `set` among subsets of its own size.
    pub fn rank(&self, set: ColorSet) -> Result<usize> {
        if self.k < 32 && set >> self.k != 0 {
            return Err(Error::invalid("color outside 0..k in subset"));
        }
        Ok(self.rank_unchecked(set))
    }

    #[inline]
    pub fn rank_unchecked(&self, mut set: ColorSet) -> usize {
        let mut rank = 0u32;
        let mut i = 1;
        while set != 0 {
            let c = set.trailing_zeros() as usize;
            rank += self.choose[c][i];
            i += 1;
            set &= set - 1;
        }
        rank as usize
    }

    /// Rank of a subset given as a list of distinct colors.
    pub fn rank_colors(&self, colors: &[usize]) -> Result<usize> {
        let mut set = 0;
        for &c in colors {
            if c >= self.k {
                return Err(Error::invalid("color outside 0..k in subset"));
            }
            set |= 1 << c;
        }
        Ok(self.rank_unchecked(set))
    }

    /// The size-`s` subset with the given colex rank.
    pub fn unrank(&self, s: usize, mut rank: usize) -> ColorSet {
        debug_assert!(rank < self.count(s));
        let mut set = 0;
        for i in (1..=s).rev() {
            // Largest c with C(c, i) <= rank.
            let mut c = i - 1;
            while c < self.k && self.choose[c + 1][i] as usize <= rank {
                c += 1;
            }
            rank -= self.choose[c][i] as usize;
            set |= 1 << c;
        }
        set
    }
}

/// For every size-`total` subset `S`, the ranks `(rank(S1), rank(S \ S1))`
/// of all its splits with `|S1| = active`.
#[derive(Debug, Clone)]
pub struct SplitTable {
    total: usize,
    active: usize,
    width: usize,
    pairs: Vec<(u32, u32)>,
}

impl SplitTable {
    pub fn new(index: &SubsetIndex, total: usize, active: usize) -> Result<SplitTable> {
        if active == 0 || active >= total || total > index.k() {
            return Err(Error::invalid("split sizes must satisfy 0 < active < total <= k"));
        }
        let width = binomial(total, active) as usize;
        let rows = index.count(total);
        let mut pairs = Vec::with_capacity(rows * width);
        let mut members = vec![0u32; total];
        for r in 0..rows {
            let set = index.unrank(total, r);
            let mut bits = set;
            for m in members.iter_mut() {
                *m = bits.trailing_zeros();
                bits &= bits - 1;
            }
            // Enumerate active-size sub-masks of the member positions.
            let mut pick: u32 = (1 << active) - 1;
            let limit: u32 = 1 << total;
            while pick < limit {
                let mut s1 = 0;
                let mut p = pick;
                while p != 0 {
                    s1 |= 1 << members[p.trailing_zeros() as usize];
                    p &= p - 1;
                }
                pairs.push((
                    index.rank_unchecked(s1) as u32,
                    index.rank_unchecked(set & !s1) as u32,
                ));
                // Gosper's hack: next mask with the same popcount.
                let c = pick & pick.wrapping_neg();
                let r = pick + c;
                pick = (((r ^ pick) >> 2) / c) | r;
            }
        }
        debug_assert_eq!(pairs.len(), rows * width);
        Ok(SplitTable {
            total,
            active,
            width,
            pairs,
        })
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn active(&self) -> usize {
        self.active
    }

    /// Splits of the subset with rank `set_rank`.
    #[inline]
    pub fn row(&self, set_rank: usize) -> &[(u32, u32)] {
        &self.pairs[set_rank * self.width..(set_rank + 1) * self.width]
    }

    pub fn n_rows(&self) -> usize {
        self.pairs.len() / self.width
    }
}
