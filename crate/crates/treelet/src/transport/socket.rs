//! TCP mesh transport. Every pair of workers shares one connection; a
//! reader thread per connection drains incoming frames into a queue so that
//! writers never wait on a peer that is itself writing.

use std::io::{Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{channel, Receiver};
use std::thread;
use std::time::{Duration, Instant};

use treelet_core::codec::{frame_header, parse_frame_header, FRAME_HEADER};

use super::Transport;
use crate::error::{Error, Result};

/// Comma-separated `host:port` list, one per rank.
pub const PEERS_ENV: &str = "TREELET_PEERS";
pub const RANK_ENV: &str = "TREELET_RANK";

const CONNECT_TIMEOUT: Duration = Duration::from_secs(30);

type Frame = (u32, Vec<u8>);

pub struct SocketEndpoint {
    rank: usize,
    streams: Vec<Option<TcpStream>>,
    inbox: Vec<Option<Receiver<Result<Frame>>>>,
}

impl SocketEndpoint {
    /// Joins the mesh described by [`PEERS_ENV`] and [`RANK_ENV`].
    pub fn from_env() -> Result<Option<SocketEndpoint>> {
        let (Ok(peers), Ok(rank)) = (std::env::var(PEERS_ENV), std::env::var(RANK_ENV)) else {
            return Ok(None);
        };
        let rank: usize = rank
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{RANK_ENV}={rank:?} is not a rank")))?;
        let addrs = peers
            .split(',')
            .map(|p| {
                p.trim()
                    .to_socket_addrs()
                    .ok()
                    .and_then(|mut a| a.next())
                    .ok_or_else(|| Error::Config(format!("bad peer address {p:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if rank >= addrs.len() {
            return Err(Error::Config(format!("rank {rank} but only {} peers", addrs.len())));
        }
        let listener = TcpListener::bind(addrs[rank])?;
        SocketEndpoint::connect(rank, &addrs, listener).map(Some)
    }

    /// Connects to every lower rank and accepts every higher one; each
    /// connection opens with the 4-byte rank of the connecting side.
    pub fn connect(rank: usize, addrs: &[SocketAddr], listener: TcpListener) -> Result<SocketEndpoint> {
        let n = addrs.len();
        let mut streams: Vec<Option<TcpStream>> = (0..n).map(|_| None).collect();
        for (peer, addr) in addrs.iter().enumerate().take(rank) {
            let deadline = Instant::now() + CONNECT_TIMEOUT;
            let mut stream = loop {
                match TcpStream::connect(addr) {
                    Ok(s) => break s,
                    Err(e) if Instant::now() > deadline => {
                        return Err(Error::Transport(format!("connect to rank {peer} at {addr}: {e}")))
                    }
                    Err(_) => thread::sleep(Duration::from_millis(20)),
                }
            };
            stream.write_all(&(rank as u32).to_be_bytes())?;
            streams[peer] = Some(stream);
        }
        for _ in rank + 1..n {
            let (mut stream, _) = listener.accept()?;
            let mut buf = [0u8; 4];
            stream.read_exact(&mut buf)?;
            let peer = u32::from_be_bytes(buf) as usize;
            if peer <= rank || peer >= n || streams[peer].is_some() {
                return Err(Error::Transport(format!("unexpected handshake from rank {peer}")));
            }
            streams[peer] = Some(stream);
        }
        let mut inbox = Vec::with_capacity(n);
        for (peer, stream) in streams.iter().enumerate() {
            let Some(stream) = stream else {
                inbox.push(None);
                continue;
            };
            stream.set_nodelay(true)?;
            let mut reader = stream.try_clone()?;
            let (tx, rx) = channel();
            thread::Builder::new()
                .name(format!("recv-{rank}-from-{peer}"))
                .spawn(move || loop {
                    match read_frame(&mut reader) {
                        Ok(Some(frame)) => {
                            if tx.send(Ok(frame)).is_err() {
                                return;
                            }
                        }
                        Ok(None) => return,
                        Err(e) => {
                            let _ = tx.send(Err(e));
                            return;
                        }
                    }
                })?;
            inbox.push(Some(rx));
        }
        Ok(SocketEndpoint {
            rank,
            streams,
            inbox,
        })
    }
}

fn read_frame(r: &mut TcpStream) -> Result<Option<Frame>> {
    let mut header = [0u8; FRAME_HEADER];
    match r.read_exact(&mut header) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let (meta, len) = parse_frame_header(header)?;
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload)?;
    Ok(Some((meta, payload)))
}

/// Endpoints for `n` ranks on loopback, all in this process.
pub fn local_socket_mesh(n: usize) -> Result<Vec<SocketEndpoint>> {
    let listeners = (0..n)
        .map(|_| TcpListener::bind("127.0.0.1:0"))
        .collect::<std::io::Result<Vec<_>>>()?;
    let addrs = listeners
        .iter()
        .map(TcpListener::local_addr)
        .collect::<std::io::Result<Vec<_>>>()?;
    thread::scope(|s| {
        let handles: Vec<_> = listeners
            .into_iter()
            .enumerate()
            .map(|(rank, l)| {
                let addrs = &addrs;
                s.spawn(move || SocketEndpoint::connect(rank, addrs, l))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("mesh setup thread panicked"))
            .collect()
    })
}

impl Transport for SocketEndpoint {
    fn rank(&self) -> usize {
        self.rank
    }

    fn n_workers(&self) -> usize {
        self.streams.len()
    }

    fn send(&mut self, to: usize, meta: u32, payload: Vec<u8>) -> Result<()> {
        let stream = self
            .streams
            .get_mut(to)
            .and_then(Option::as_mut)
            .ok_or_else(|| Error::Transport(format!("no connection from {} to {to}", self.rank)))?;
        let mut frame = Vec::with_capacity(FRAME_HEADER + payload.len());
        frame.extend_from_slice(&frame_header(meta, payload.len())?);
        frame.extend_from_slice(&payload);
        stream.write_all(&frame)?;
        Ok(())
    }

    fn recv(&mut self, from: usize) -> Result<(u32, Vec<u8>)> {
        let rx = self
            .inbox
            .get(from)
            .and_then(Option::as_ref)
            .ok_or_else(|| Error::Transport(format!("no connection from {from} to {}", self.rank)))?;
        rx.recv()
            .map_err(|_| Error::Transport(format!("rank {from} closed the connection")))?
    }
}

impl Drop for SocketEndpoint {
    fn drop(&mut self) {
        for s in self.streams.iter().flatten() {
            let _ = s.shutdown(Shutdown::Both);
        }
    }
}
