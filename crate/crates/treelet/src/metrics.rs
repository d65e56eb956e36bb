//! Per-worker instrumentation: phase timings, wire counters, overlap and
//! accounted memory.

use serde::Serialize;

use crate::transport::WireStats;

/// Accounted bytes of live count tables and receive buffers, with peaks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct MemTracker {
    pub tables: usize,
    pub buffers: usize,
    pub peak_tables: usize,
    pub peak_buffers: usize,
    pub peak_total: usize,
    /// Largest single table ever allocated.
    pub max_table: usize,
}

impl MemTracker {
    pub fn alloc_table(&mut self, bytes: usize) {
        self.tables += bytes;
        self.max_table = self.max_table.max(bytes);
        self.update();
    }

    pub fn free_table(&mut self, bytes: usize) {
        self.tables -= bytes;
    }

    pub fn alloc_buffer(&mut self, bytes: usize) {
        self.buffers += bytes;
        self.update();
    }

    pub fn free_buffer(&mut self, bytes: usize) {
        self.buffers -= bytes;
    }

    fn update(&mut self) {
        self.peak_tables = self.peak_tables.max(self.tables);
        self.peak_buffers = self.peak_buffers.max(self.buffers);
        self.peak_total = self.peak_total.max(self.tables + self.buffers);
    }
}

/// Overlap ratio samples of one pipeline stage index.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StageOverlap {
    pub stage: usize,
    pub mean: f64,
    pub min: f64,
    pub samples: u64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct WorkerMetrics {
    pub rank: usize,
    pub coloring_seconds: f64,
    pub local_compute_seconds: f64,
    pub remote_compute_seconds: f64,
    pub communication_seconds: f64,
    /// Time blocked waiting for a peer's frames.
    pub recv_wait_seconds: f64,
    /// Sum over compute phases of the busiest lane's time.
    pub lane_makespan_seconds: f64,
    pub bytes_sent: u64,
    pub bytes_received: u64,
    pub rows_sent: u64,
    pub rows_received: u64,
    pub frames_sent: u64,
    pub peak_table_bytes: usize,
    pub peak_buffer_bytes: usize,
    pub peak_total_bytes: usize,
    pub max_table_bytes: usize,
    /// Largest received payload of one exchange step from one peer.
    pub max_step_payload_bytes: usize,
    pub overlap: Vec<StageOverlap>,
}

impl WorkerMetrics {
    pub fn new(rank: usize) -> WorkerMetrics {
        WorkerMetrics {
            rank,
            ..WorkerMetrics::default()
        }
    }

    pub fn compute_seconds(&self) -> f64 {
        self.local_compute_seconds + self.remote_compute_seconds
    }

    pub(crate) fn absorb_wire(&mut self, w: &WireStats) {
        self.bytes_sent = w.bytes_sent;
        self.bytes_received = w.bytes_received;
        self.rows_sent = w.rows_sent;
        self.rows_received = w.rows_received;
        self.frames_sent = w.frames_sent;
        self.recv_wait_seconds = w.recv_wait.as_secs_f64();
    }

    pub(crate) fn absorb_mem(&mut self, m: &MemTracker) {
        self.peak_table_bytes = m.peak_tables;
        self.peak_buffer_bytes = m.peak_buffers;
        self.peak_total_bytes = m.peak_total;
        self.max_table_bytes = m.max_table;
    }

    /// Records `min(compute, comm) / comm` for `stage` (1 when nothing was
    /// transferred).
    pub(crate) fn record_overlap(&mut self, stage: usize, compute: f64, comm: f64) {
        let rho = if comm > 0.0 { compute.min(comm) / comm } else { 1.0 };
        while self.overlap.len() < stage {
            let s = self.overlap.len() + 1;
            self.overlap.push(StageOverlap {
                stage: s,
                min: 1.0,
                ..StageOverlap::default()
            });
        }
        let o = &mut self.overlap[stage - 1];
        o.mean = (o.mean * o.samples as f64 + rho) / (o.samples + 1) as f64;
        o.min = o.min.min(rho);
        o.samples += 1;
    }
}

/// CPU time consumed by the calling thread.
pub fn thread_cpu_seconds() -> f64 {
    let mut ts = libc::timespec {
        tv_sec: 0,
        tv_nsec: 0,
    };
    // SAFETY: `ts` is a valid out-pointer and the clock id is supported on
    // every Linux and macOS target.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    if rc != 0 {
        return 0.0;
    }
    ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
}
