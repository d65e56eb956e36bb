//! Count tables: one dense row of `C(k, |T_i|)` counts per local vertex.

use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};

#[derive(Debug, Clone, PartialEq)]
pub struct CountTable {
    row_len: usize,
    data: Vec<f64>,
}

impl CountTable {
    pub fn zeros(n_rows: usize, row_len: usize) -> CountTable {
        CountTable {
            row_len,
            data: vec![0.0; n_rows * row_len],
        }
    }

    pub fn row_len(&self) -> usize {
        self.row_len
    }

    pub fn n_rows(&self) -> usize {
        self.data.len().checked_div(self.row_len).unwrap_or(0)
    }

    #[inline]
    pub fn row(&self, slot: usize) -> &[f64] {
        &self.data[slot * self.row_len..(slot + 1) * self.row_len]
    }

    #[inline]
    pub fn row_mut(&mut self, slot: usize) -> &mut [f64] {
        &mut self.data[slot * self.row_len..(slot + 1) * self.row_len]
    }

    /// Bytes held by the row storage.
    pub fn bytes(&self) -> usize {
        self.data.len() * size_of::<f64>()
    }

    pub fn bytes_for(n_rows: usize, row_len: usize) -> usize {
        n_rows * row_len * size_of::<f64>()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// A table under construction that many lanes add into concurrently.
///
/// Values are `f64` bit patterns updated with compare-and-swap. All counts
/// are integers below 2^53, so the result does not depend on the order in
/// which lanes land their additions.
#[derive(Debug)]
pub struct AtomicCountTable {
    row_len: usize,
    data: Vec<AtomicU64>,
}

impl AtomicCountTable {
    pub fn zeros(n_rows: usize, row_len: usize) -> AtomicCountTable {
        let data = (0..n_rows * row_len).map(|_| AtomicU64::new(0)).collect();
        AtomicCountTable { row_len, data }
    }

    pub fn row_len(&self) -> usize {
        self.row_len
    }

    pub fn bytes(&self) -> usize {
        self.data.len() * size_of::<AtomicU64>()
    }

    #[inline]
    fn add(cell: &AtomicU64, x: f64) {
        let mut cur = cell.load(Ordering::Relaxed);
        loop {
            let next = (f64::from_bits(cur) + x).to_bits();
            match cell.compare_exchange_weak(cur, next, Ordering::Relaxed, Ordering::Relaxed) {
                Ok(_) => return,
                Err(seen) => cur = seen,
            }
        }
    }

    /// Adds `partial` into row `slot`, skipping zero entries.
    pub fn add_row(&self, slot: usize, partial: &[f64]) {
        let row = &self.data[slot * self.row_len..(slot + 1) * self.row_len];
        for (cell, &x) in row.iter().zip(partial) {
            if x != 0.0 {
                Self::add(cell, x);
            }
        }
    }

    /// Freezes the table, dividing every entry by the over-count factor.
    pub fn finish(self, over_count: u32) -> CountTable {
        let d = over_count as f64;
        let data = self
            .data
            .into_iter()
            .map(|cell| {
                let x = f64::from_bits(cell.into_inner());
                if over_count == 1 {
                    x
                } else {
                    x / d
                }
            })
            .collect();
        CountTable {
            row_len: self.row_len,
            data,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_rows_accumulate_and_divide() {
        let t = AtomicCountTable::zeros(2, 3);
        t.add_row(1, &[2.0, 0.0, 4.0]);
        t.add_row(1, &[2.0, 6.0, 0.0]);
        let t = t.finish(2);
        assert_eq!(t.row(0), &[0.0, 0.0, 0.0]);
        assert_eq!(t.row(1), &[2.0, 3.0, 2.0]);
        assert_eq!(t.n_rows(), 2);
        assert_eq!(t.bytes(), 48);
    }
}
