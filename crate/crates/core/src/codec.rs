//! Packet meta ids, sparse row encoding and frame headers.
//!
//! Row layout (big-endian): 8-byte vertex id, 4-byte count, then either
//! `count` pairs of (4-byte subset rank, 8-byte value) or, when the high bit
//! of the count is set, `count & !DENSE_FLAG` plain 8-byte values. Rows that
//! are all zeros are not sent at all.
//!
//! A frame is a 4-byte length (meta id plus payload), the 4-byte meta id
//! and the payload. A message from one worker to another is a run of frames
//! with offsets `0, 1, ..`: a header frame holding the covered vertex id
//! range `[lo, hi)` as two 8-byte integers, the row chunks, and a final
//! frame with an empty payload.

use alloc::vec::Vec;

use crate::graph::VertexId;
use crate::kernel::RemoteRows;
use crate::{Error, Result};

pub const SENDER_BITS: u32 = 12;
pub const RECEIVER_BITS: u32 = 12;
pub const OFFSET_BITS: u32 = 8;

/// Frames per message, header and terminator included.
pub const MAX_CHUNKS: usize = 1 << OFFSET_BITS;

/// Row chunks per message.
pub const MAX_ROW_CHUNKS: usize = MAX_CHUNKS - 2;

pub const DENSE_FLAG: u32 = 1 << 31;

const ROW_HEADER: usize = 12;
const SPARSE_ENTRY: usize = 12;
const DENSE_ENTRY: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MetaId {
    pub sender: u32,
    pub receiver: u32,
    pub offset: u32,
}

pub fn encode_meta(sender: u32, receiver: u32, offset: u32) -> Result<u32> {
    for (field, value, bits) in [
        ("sender", sender, SENDER_BITS),
        ("receiver", receiver, RECEIVER_BITS),
        ("offset", offset, OFFSET_BITS),
    ] {
        if value >> bits != 0 {
            return Err(Error::FieldRange {
                field,
                value: value as u64,
                bits,
            });
        }
    }
    Ok(sender << (RECEIVER_BITS + OFFSET_BITS) | receiver << OFFSET_BITS | offset)
}

pub fn decode_meta(id: u32) -> MetaId {
    MetaId {
        sender: id >> (RECEIVER_BITS + OFFSET_BITS),
        receiver: (id >> OFFSET_BITS) & ((1 << RECEIVER_BITS) - 1),
        offset: id & ((1 << OFFSET_BITS) - 1),
    }
}

/// Encoded size of `row`, 0 if it would be elided.
pub fn encoded_row_len(row: &[f64]) -> usize {
    let nnz = row.iter().filter(|&&x| x != 0.0).count();
    match nnz {
        0 => 0,
        _ if is_dense(nnz, row.len()) => ROW_HEADER + DENSE_ENTRY * row.len(),
        _ => ROW_HEADER + SPARSE_ENTRY * nnz,
    }
}

fn is_dense(nnz: usize, len: usize) -> bool {
    2 * nnz > len
}

/// Appends `row` for `vertex`; returns false when the row is all zeros and
/// nothing was written.
pub fn encode_row(out: &mut Vec<u8>, vertex: VertexId, row: &[f64]) -> bool {
    let nnz = row.iter().filter(|&&x| x != 0.0).count();
    if nnz == 0 {
        return false;
    }
    out.extend_from_slice(&(vertex as u64).to_be_bytes());
    if is_dense(nnz, row.len()) {
        out.extend_from_slice(&(row.len() as u32 | DENSE_FLAG).to_be_bytes());
        for &x in row {
            out.extend_from_slice(&x.to_be_bytes());
        }
    } else {
        out.extend_from_slice(&(nnz as u32).to_be_bytes());
        for (i, &x) in row.iter().enumerate() {
            if x != 0.0 {
                out.extend_from_slice(&(i as u32).to_be_bytes());
                out.extend_from_slice(&x.to_be_bytes());
            }
        }
    }
    true
}

/// Encodes the rows of `ids` and cuts them into chunk payloads at row
/// boundaries, aiming at `target_bytes` per chunk but never producing more
/// than `MAX_ROW_CHUNKS` chunks. Returns the chunks and the number of rows
/// actually written.
pub fn encode_chunks<'a, F>(ids: &[VertexId], mut row_of: F, target_bytes: usize) -> (Vec<Vec<u8>>, usize)
where
    F: FnMut(VertexId) -> &'a [f64],
{
    let mut payload = Vec::new();
    let mut ends = Vec::new();
    for &v in ids {
        if encode_row(&mut payload, v, row_of(v)) {
            ends.push(payload.len());
        }
    }
    let rows = ends.len();
    (split_at_rows(payload, &ends, target_bytes), rows)
}

fn split_at_rows(payload: Vec<u8>, ends: &[usize], target_bytes: usize) -> Vec<Vec<u8>> {
    if payload.is_empty() {
        return Vec::new();
    }
    // Greedy packing makes any two neighboring chunks exceed the target, so
    // n chunks hold more than floor(n / 2) * target bytes.
    let floor = (2 * payload.len()).div_ceil(MAX_ROW_CHUNKS - 1);
    let target = target_bytes.max(floor).max(1);
    let mut chunks = Vec::new();
    let mut start = 0;
    let mut last_end = 0;
    for &end in ends {
        if end - start > target && last_end > start {
            chunks.push(payload[start..last_end].to_vec());
            start = last_end;
        }
        last_end = end;
    }
    chunks.push(payload[start..].to_vec());
    debug_assert!(chunks.len() <= MAX_ROW_CHUNKS);
    chunks
}

/// Decodes every row of `payload` into `dest`; returns the row count.
pub fn decode_rows(payload: &[u8], dest: &mut RemoteRows) -> Result<usize> {
    let mut rest = payload;
    let mut rows = 0;
    while !rest.is_empty() {
        let vertex = take_u64(&mut rest)?;
        let vertex = VertexId::try_from(vertex)
            .map_err(|_| Error::Codec(alloc::format!("vertex id {vertex} out of range")))?;
        let count = take_u32(&mut rest)?;
        let row_len = dest.row_len();
        let row = dest.push_row(vertex)?;
        if count & DENSE_FLAG != 0 {
            let n = (count & !DENSE_FLAG) as usize;
            if n != row_len {
                return Err(Error::Codec(alloc::format!(
                    "dense row of length {n}, expected {row_len}"
                )));
            }
            for x in row.iter_mut() {
                *x = f64::from_bits(take_u64(&mut rest)?);
            }
        } else {
            for _ in 0..count {
                let i = take_u32(&mut rest)? as usize;
                let x = f64::from_bits(take_u64(&mut rest)?);
                *row.get_mut(i).ok_or_else(|| {
                    Error::Codec(alloc::format!("subset index {i} outside row of {row_len}"))
                })? = x;
            }
        }
        rows += 1;
    }
    Ok(rows)
}

fn take<const N: usize>(rest: &mut &[u8]) -> Result<[u8; N]> {
    if rest.len() < N {
        return Err(Error::Codec("truncated row".into()));
    }
    let (head, tail) = rest.split_at(N);
    *rest = tail;
    Ok(head.try_into().expect("length checked"))
}

fn take_u32(rest: &mut &[u8]) -> Result<u32> {
    take::<4>(rest).map(u32::from_be_bytes)
}

fn take_u64(rest: &mut &[u8]) -> Result<u64> {
    take::<8>(rest).map(u64::from_be_bytes)
}

pub const FRAME_HEADER: usize = 8;

pub fn encode_range(lo: u64, hi: u64) -> Vec<u8> {
    let mut out = Vec::with_capacity(16);
    out.extend_from_slice(&lo.to_be_bytes());
    out.extend_from_slice(&hi.to_be_bytes());
    out
}

pub fn decode_range(payload: &[u8]) -> Result<(u64, u64)> {
    if payload.len() != 16 {
        return Err(Error::Codec(alloc::format!(
            "range header of {} bytes, expected 16",
            payload.len()
        )));
    }
    let mut rest = payload;
    let lo = take_u64(&mut rest)?;
    let hi = take_u64(&mut rest)?;
    if lo > hi {
        return Err(Error::Codec("range header with lo > hi".into()));
    }
    Ok((lo, hi))
}

/// Length prefix and meta id for a frame carrying `payload_len` bytes.
pub fn frame_header(meta: u32, payload_len: usize) -> Result<[u8; FRAME_HEADER]> {
    let len = u32::try_from(payload_len + 4)
        .map_err(|_| Error::Codec("frame payload exceeds 4 GiB".into()))?;
    let mut h = [0u8; FRAME_HEADER];
    h[..4].copy_from_slice(&len.to_be_bytes());
    h[4..].copy_from_slice(&meta.to_be_bytes());
    Ok(h)
}

/// `(meta id, payload length)` from a frame header.
pub fn parse_frame_header(h: [u8; FRAME_HEADER]) -> Result<(u32, usize)> {
    let len = u32::from_be_bytes(h[..4].try_into().unwrap()) as usize;
    if len < 4 {
        return Err(Error::Codec(alloc::format!("frame length {len} below 4")));
    }
    Ok((u32::from_be_bytes(h[4..].try_into().unwrap()), len - 4))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn meta_example() {
        assert_eq!(encode_meta(2, 3, 5).unwrap(), 2_097_925);
        assert_eq!(encode_meta(0, 0, 0).unwrap(), 0);
        assert_eq!(
            decode_meta(2_097_925),
            MetaId {
                sender: 2,
                receiver: 3,
                offset: 5
            }
        );
    }

    #[test]
    fn meta_range() {
        assert!(matches!(
            encode_meta(4096, 0, 0),
            Err(Error::FieldRange { field: "sender", .. })
        ));
        assert!(encode_meta(0, 0, 256).is_err());
        assert!(encode_meta(4095, 4095, 255).is_ok());
    }

    #[test]
    fn zero_rows_elided() {
        let mut out = Vec::new();
        assert!(!encode_row(&mut out, 3, &[0.0; 4]));
        assert!(out.is_empty());
        assert_eq!(encoded_row_len(&[0.0; 4]), 0);
    }

    #[test]
    fn sparse_and_dense_layouts() {
        let mut out = Vec::new();
        encode_row(&mut out, 1, &[0.0, 2.0, 0.0, 0.0]);
        assert_eq!(out.len(), 12 + 12);
        assert_eq!(&out[8..12], &1u32.to_be_bytes());
        out.clear();
        encode_row(&mut out, 1, &[1.0, 2.0, 3.0, 0.0]);
        assert_eq!(out.len(), 12 + 32);
        assert_eq!(&out[8..12], &(4 | DENSE_FLAG).to_be_bytes());
    }

    #[test]
    fn decode_round_trip() {
        let rows = [vec![0.0, 5.0, 0.0], vec![0.0; 3], vec![1.0, 2.0, 3.0]];
        let (chunks, n) = encode_chunks(&[2, 4, 9], |v| &rows[[2, 4, 9].iter().position(|&x| x == v).unwrap()], 1);
        assert_eq!(n, 2);
        assert_eq!(chunks.len(), 2);
        let mut dest = RemoteRows::new(&[2, 4, 9], 3);
        for c in &chunks {
            decode_rows(c, &mut dest).unwrap();
        }
        use crate::kernel::RowSource;
        assert_eq!(dest.row(2).unwrap(), Some(&[0.0, 5.0, 0.0][..]));
        assert_eq!(dest.row(4).unwrap(), None);
        assert_eq!(dest.row(9).unwrap(), Some(&[1.0, 2.0, 3.0][..]));
    }

    #[test]
    fn truncated_input() {
        let mut out = Vec::new();
        encode_row(&mut out, 0, &[1.0, 0.0, 0.0]);
        out.pop();
        let mut dest = RemoteRows::new(&[0], 3);
        assert!(matches!(decode_rows(&out, &mut dest), Err(Error::Codec(_))));
    }

    #[test]
    fn chunk_count_is_capped() {
        let row = [1.0];
        let ids: Vec<VertexId> = (0..10_000).collect();
        let (chunks, n) = encode_chunks(&ids, |_| &row, 1);
        assert_eq!(n, 10_000);
        assert!(chunks.len() <= MAX_ROW_CHUNKS);
        assert_eq!(chunks.iter().map(Vec::len).sum::<usize>(), 10_000 * 20);
    }

    #[test]
    fn frame_header_round_trip() {
        let h = frame_header(77, 10).unwrap();
        assert_eq!(&h[..4], &14u32.to_be_bytes());
        assert_eq!(parse_frame_header(h).unwrap(), (77, 10));
    }
}
