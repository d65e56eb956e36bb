use std::sync::mpsc::{channel, Receiver, Sender};

use super::Transport;
use crate::error::{Error, Result};

type Frame = (u32, Vec<u8>);

/// One worker's end of an in-process mesh of unbounded channels.
pub struct InProcEndpoint {
    rank: usize,
    to: Vec<Option<Sender<Frame>>>,
    from: Vec<Option<Receiver<Frame>>>,
}

/// Fully connected endpoints for `n` workers; element `i` has rank `i`.
pub fn inproc_mesh(n: usize) -> Vec<InProcEndpoint> {
    let mut eps: Vec<InProcEndpoint> = (0..n)
        .map(|rank| InProcEndpoint {
            rank,
            to: (0..n).map(|_| None).collect(),
            from: (0..n).map(|_| None).collect(),
        })
        .collect();
    for a in 0..n {
        for b in 0..n {
            if a != b {
                let (tx, rx) = channel();
                eps[a].to[b] = Some(tx);
                eps[b].from[a] = Some(rx);
            }
        }
    }
    eps
}

impl Transport for InProcEndpoint {
    fn rank(&self) -> usize {
        self.rank
    }

    fn n_workers(&self) -> usize {
        self.to.len()
    }

    fn send(&mut self, to: usize, meta: u32, payload: Vec<u8>) -> Result<()> {
        let tx = self
            .to
            .get(to)
            .and_then(Option::as_ref)
            .ok_or_else(|| Error::Transport(format!("no channel from {} to {to}", self.rank)))?;
        tx.send((meta, payload))
            .map_err(|_| Error::Transport(format!("worker {to} hung up")))
    }

    fn recv(&mut self, from: usize) -> Result<(u32, Vec<u8>)> {
        let rx = self
            .from
            .get(from)
            .and_then(Option::as_ref)
            .ok_or_else(|| Error::Transport(format!("no channel from {from} to {}", self.rank)))?;
        rx.recv()
            .map_err(|_| Error::Transport(format!("worker {from} hung up")))
    }
}
