//! Point-to-point frame transports and the message framing on top of them.
//!
//! A transport moves frames `(meta id, payload)` between workers with FIFO
//! order per ordered pair. Sends never block on the receiver.

mod inproc;
mod socket;

use std::ops::Range;
use std::time::{Duration, Instant};

use treelet_core::codec::{
    decode_meta, decode_range, decode_rows, encode_chunks, encode_meta, encode_range, MAX_CHUNKS,
    FRAME_HEADER,
};
use treelet_core::kernel::RemoteRows;
use treelet_core::VertexId;

use crate::error::{Error, Result};

pub use inproc::{inproc_mesh, InProcEndpoint};
pub use socket::{local_socket_mesh, SocketEndpoint, PEERS_ENV, RANK_ENV};

pub trait Transport: Send {
    fn rank(&self) -> usize;
    fn n_workers(&self) -> usize;
    fn send(&mut self, to: usize, meta: u32, payload: Vec<u8>) -> Result<()>;
    /// Next frame sent by `from`, blocking until it arrives.
    fn recv(&mut self, from: usize) -> Result<(u32, Vec<u8>)>;
}

impl<T: Transport + ?Sized> Transport for Box<T> {
    fn rank(&self) -> usize {
        (**self).rank()
    }
    fn n_workers(&self) -> usize {
        (**self).n_workers()
    }
    fn send(&mut self, to: usize, meta: u32, payload: Vec<u8>) -> Result<()> {
        (**self).send(to, meta, payload)
    }
    fn recv(&mut self, from: usize) -> Result<(u32, Vec<u8>)> {
        (**self).recv(from)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct WireStats {
    pub bytes_sent: u64,
    pub bytes_received: u64,
    pub rows_sent: u64,
    pub rows_received: u64,
    pub frames_sent: u64,
    /// Time spent blocked waiting for frames.
    pub recv_wait: Duration,
}

/// Every vertex id: the range of an unsegmented message.
pub const FULL_RANGE: Range<u64> = 0..u64::MAX;

fn frame_bytes(payload: usize) -> u64 {
    (FRAME_HEADER + payload) as u64
}

/// Sends a header frame with `range`, the row chunks and an empty
/// terminator frame.
pub fn send_message<T: Transport + ?Sized>(
    t: &mut T,
    to: usize,
    range: Range<u64>,
    chunks: Vec<Vec<u8>>,
    stats: &mut WireStats,
) -> Result<()> {
    let me = t.rank() as u32;
    let mut frames = Vec::with_capacity(chunks.len() + 2);
    frames.push(encode_range(range.start, range.end));
    frames.extend(chunks);
    frames.push(Vec::new());
    if frames.len() > MAX_CHUNKS {
        return Err(Error::Transport(format!("{} frames exceed the offset field", frames.len())));
    }
    for (offset, payload) in frames.into_iter().enumerate() {
        let meta = encode_meta(me, to as u32, offset as u32)?;
        stats.bytes_sent += frame_bytes(payload.len());
        stats.frames_sent += 1;
        t.send(to, meta, payload)?;
    }
    Ok(())
}

/// Receives one message from `from`: `on_header` turns the announced range
/// into a state that every row chunk is then handed to.
pub fn recv_message<T, S, H, C>(
    t: &mut T,
    from: usize,
    stats: &mut WireStats,
    on_header: H,
    mut on_chunk: C,
) -> Result<(Range<u64>, S)>
where
    T: Transport + ?Sized,
    H: FnOnce(Range<u64>) -> Result<S>,
    C: FnMut(&mut S, &[u8]) -> Result<()>,
{
    let me = t.rank() as u32;
    let mut next = |expected_offset: u32, stats: &mut WireStats| -> Result<Vec<u8>> {
        let start = Instant::now();
        let (meta, payload) = t.recv(from)?;
        stats.recv_wait += start.elapsed();
        stats.bytes_received += frame_bytes(payload.len());
        let id = decode_meta(meta);
        if id.sender != from as u32 || id.receiver != me || id.offset != expected_offset {
            return Err(Error::Transport(format!(
                "unexpected frame {id:?}, wanted sender {from} receiver {me} offset {expected_offset}"
            )));
        }
        Ok(payload)
    };
    let (lo, hi) = decode_range(&next(0, stats)?)?;
    let mut state = on_header(lo..hi)?;
    let mut offset = 1;
    loop {
        let payload = next(offset, stats)?;
        if payload.is_empty() {
            return Ok((lo..hi, state));
        }
        on_chunk(&mut state, &payload)?;
        offset += 1;
    }
}

/// The part of a sorted id list that falls in `range`.
pub fn ids_in(ids: &[VertexId], range: &Range<u64>) -> Range<usize> {
    let lo = ids.partition_point(|&v| (v as u64) < range.start);
    let hi = ids.partition_point(|&v| (v as u64) < range.end);
    lo..hi
}

/// Encodes and sends the rows of `ids` that fall in `range`; returns the
/// number of nonzero rows sent.
pub fn send_rows<'a, T, F>(
    t: &mut T,
    to: usize,
    ids: &[VertexId],
    range: Range<u64>,
    row_of: F,
    chunk_bytes: usize,
    stats: &mut WireStats,
) -> Result<usize>
where
    T: Transport + ?Sized,
    F: FnMut(VertexId) -> &'a [f64],
{
    let (chunks, rows) = encode_chunks(&ids[ids_in(ids, &range)], row_of, chunk_bytes);
    send_message(t, to, range, chunks, stats)?;
    stats.rows_sent += rows as u64;
    Ok(rows)
}

/// Receives a row message from `from`; `expected` is the full request list
/// for this pair, narrowed to the range announced in the header.
/// `on_grow` sees the buffer size after every decoded chunk.
pub fn recv_rows<T, G>(
    t: &mut T,
    from: usize,
    expected: &[VertexId],
    row_len: usize,
    stats: &mut WireStats,
    mut on_grow: G,
) -> Result<(Range<u64>, RemoteRows)>
where
    T: Transport + ?Sized,
    G: FnMut(usize),
{
    let (range, rows) = recv_message(
        t,
        from,
        stats,
        |range| Ok(RemoteRows::new(&expected[ids_in(expected, &range)], row_len)),
        |rows, chunk| {
            decode_rows(chunk, rows)?;
            on_grow(rows.bytes());
            Ok(())
        },
    )?;
    stats.rows_received += rows.n_rows() as u64;
    Ok((range, rows))
}

/// Sends plain `f64` values (used for reductions).
pub fn send_values<T: Transport + ?Sized>(
    t: &mut T,
    to: usize,
    values: &[f64],
    stats: &mut WireStats,
) -> Result<()> {
    let payload: Vec<u8> = values.iter().flat_map(|x| x.to_be_bytes()).collect();
    let chunks = if payload.is_empty() { vec![] } else { vec![payload] };
    send_message(t, to, FULL_RANGE, chunks, stats)
}

pub fn recv_values<T: Transport + ?Sized>(
    t: &mut T,
    from: usize,
    stats: &mut WireStats,
) -> Result<Vec<f64>> {
    let (_, out) = recv_message(t, from, stats, |_| Ok(Vec::new()), |out, chunk| {
        if chunk.len() % 8 != 0 {
            return Err(Error::Transport("value payload not a multiple of 8 bytes".into()));
        }
        out.extend(chunk.chunks_exact(8).map(|b| f64::from_be_bytes(b.try_into().unwrap())));
        Ok(())
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use treelet_core::kernel::RowSource;

    fn exchange<T: Transport + 'static>(mut eps: Vec<T>) {
        let mut b = eps.pop().unwrap();
        let mut a = eps.pop().unwrap();
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64, 0.0, (i % 3) as f64]).collect();
        let ids: Vec<VertexId> = (0..50).collect();
        let handle = std::thread::spawn(move || {
            let mut stats = WireStats::default();
            let mut grown = 0;
            let (range, got) =
                recv_rows(&mut b, 0, &(0..50).collect::<Vec<_>>(), 3, &mut stats, |n| grown = n).unwrap();
            assert_eq!(range, 10..40);
            assert_eq!(grown, got.bytes());
            for v in 10..40u32 {
                let expect = [v as f64, 0.0, (v % 3) as f64];
                match got.row(v).unwrap() {
                    Some(r) => assert_eq!(r, expect),
                    None => assert!(expect.iter().all(|&x| x == 0.0)),
                }
            }
            assert!(got.row(5).is_err());
            let values = recv_values(&mut b, 0, &mut stats).unwrap();
            assert_eq!(values, [1.5, -2.0]);
            stats
        });
        let mut stats = WireStats::default();
        let sent = send_rows(&mut a, 1, &ids, 10..40, |v| &rows[v as usize], 64, &mut stats).unwrap();
        assert_eq!(sent, 30);
        send_values(&mut a, 1, &[1.5, -2.0], &mut stats).unwrap();
        let received = handle.join().unwrap();
        assert_eq!(received.bytes_received, stats.bytes_sent);
        assert_eq!(received.rows_received, 30);
    }

    #[test]
    fn inproc_messages() {
        exchange(inproc_mesh(2));
    }

    #[test]
    fn socket_messages() {
        exchange(local_socket_mesh(2).unwrap());
    }

    #[test]
    fn wrong_offset_is_a_protocol_error() {
        let mut eps = inproc_mesh(2);
        let meta = encode_meta(0, 1, 3).unwrap();
        eps[0].send(1, meta, vec![]).unwrap();
        let mut stats = WireStats::default();
        let err = recv_values(&mut eps[1], 0, &mut stats).unwrap_err();
        assert!(matches!(err, Error::Transport(_)));
    }
}
