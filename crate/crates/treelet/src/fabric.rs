//! One worker's evaluation of a coloring over the sub-template plan.
//!
//! Every non-leaf entry is computed in two phases: the local phase reads
//! passive-child rows of vertices this worker owns, the remote phase reads
//! rows shipped by the other workers. Remote rows move either all at once
//! (all-to-all) or through the ring pipeline, where each step's message is
//! cut into id-range segments and the transfer of one segment overlaps the
//! computation on the previous one.

use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;
use std::time::Instant;

use treelet_core::cost::{cost_metrics_from, IndexSet};
use treelet_core::graph::Csr;
use treelet_core::kernel::{
    accumulate_neighbors, init_base_counts, DpContext, LocalRows, RemoteRows, RowSource,
};
use treelet_core::schedule::{segment_ranges, select_mode, DEFAULT_ADAPTIVE_THRESHOLD};
use treelet_core::subset::SplitTable;
use treelet_core::table::AtomicCountTable;
use treelet_core::tasks::{build_task_queue, build_task_queue_within, Task, TaskQueue};
use treelet_core::{
    Coloring, CountTable, ExchangePlan, Graph, LocalView, Mode, ModePolicy, Partition,
    RingSchedule, VertexId,
};

use crate::error::{Error, Result};
use crate::metrics::{thread_cpu_seconds, MemTracker, WorkerMetrics};
use crate::transport::{recv_rows, send_rows, Transport, WireStats, FULL_RANGE};

pub const DEFAULT_TASK_SIZE: usize = 50;
pub const DEFAULT_SEGMENTS: usize = 2;
pub const DEFAULT_CHUNK_BYTES: usize = 1 << 16;

/// How computation lanes are realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LaneExecution {
    /// One OS thread per lane.
    #[default]
    Threads,
    /// Tasks run back to back on one thread with per-task CPU timing; the
    /// reported makespan is what `lanes` parallel lanes would need under
    /// the same assignment policy. For hosts with fewer cores than lanes.
    Emulated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FabricConfig {
    pub policy: ModePolicy,
    pub load_balance: bool,
    pub task_size: usize,
    pub lanes: usize,
    pub lane_execution: LaneExecution,
    pub chunk_bytes: usize,
    /// Pieces each pipeline step's message is cut into.
    pub pipeline_segments: usize,
    pub task_seed: u64,
    /// Entries entering the intensity used by the adaptive policy.
    pub intensity_index_set: IndexSet,
}

impl Default for FabricConfig {
    fn default() -> Self {
        FabricConfig {
            policy: ModePolicy::Adaptive {
                threshold: DEFAULT_ADAPTIVE_THRESHOLD,
            },
            load_balance: true,
            task_size: DEFAULT_TASK_SIZE,
            lanes: thread::available_parallelism().map_or(1, |n| n.get()),
            lane_execution: LaneExecution::Threads,
            chunk_bytes: DEFAULT_CHUNK_BYTES,
            pipeline_segments: DEFAULT_SEGMENTS,
            task_seed: 0x7a5c,
            intensity_index_set: crate::templates::calibrated_index_set(),
        }
    }
}

/// Exchange mode chosen for one plan entry, identical on every worker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntryMode {
    pub entry: usize,
    pub size: usize,
    pub intensity: f64,
    pub mode: Mode,
}

/// State shared read-only by all workers of a run.
#[derive(Debug)]
pub struct Fabric<'g> {
    graph: &'g Graph,
    partition: Partition,
    exchange: ExchangePlan,
    dp: DpContext,
    modes: Vec<EntryMode>,
    config: FabricConfig,
}

impl<'g> Fabric<'g> {
    pub fn new(
        graph: &'g Graph,
        partition: Partition,
        dp: DpContext,
        config: FabricConfig,
    ) -> Result<Fabric<'g>> {
        if config.task_size == 0 {
            return Err(Error::Config("task size must be at least 1".into()));
        }
        if config.lanes == 0 {
            return Err(Error::Config("at least one computation lane is required".into()));
        }
        if partition.n_workers() == 0 {
            return Err(Error::Config("at least one worker is required".into()));
        }
        let exchange = ExchangePlan::build(graph, &partition);
        let plan = dp.plan();
        let modes = (0..plan.entries().len())
            .map(|i| {
                let size = plan.entry(i).size;
                let intensity = cost_metrics_from(plan, plan.k(), i, config.intensity_index_set)
                    .intensity();
                EntryMode {
                    entry: i,
                    size,
                    intensity,
                    mode: select_mode(config.policy, size, intensity),
                }
            })
            .collect();
        Ok(Fabric {
            graph,
            partition,
            exchange,
            dp,
            modes,
            config,
        })
    }

    pub fn graph(&self) -> &Graph {
        self.graph
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn exchange(&self) -> &ExchangePlan {
        &self.exchange
    }

    pub fn dp(&self) -> &DpContext {
        &self.dp
    }

    pub fn modes(&self) -> &[EntryMode] {
        &self.modes
    }

    pub fn config(&self) -> &FabricConfig {
        &self.config
    }

    pub fn n_workers(&self) -> usize {
        self.partition.n_workers()
    }
}

/// One worker: its slice of the graph, its transport endpoint and its
/// instrumentation.
pub struct Worker<'f, 'g, T> {
    fabric: &'f Fabric<'g>,
    view: LocalView,
    transport: T,
    local_queue: TaskQueue,
    /// Full-range remote queues by sender, for all-to-all entries.
    remote_queues: Vec<TaskQueue>,
    wire: WireStats,
    mem: MemTracker,
    metrics: WorkerMetrics,
}

impl<'f, 'g, T: Transport> Worker<'f, 'g, T> {
    pub fn new(fabric: &'f Fabric<'g>, transport: T) -> Result<Self> {
        let rank = transport.rank();
        if transport.n_workers() != fabric.n_workers() || rank >= fabric.n_workers() {
            return Err(Error::Config(format!(
                "transport spans {} workers, the partition {}",
                transport.n_workers(),
                fabric.n_workers()
            )));
        }
        let view = LocalView::build(fabric.graph, &fabric.partition, rank);
        let queue = |lists: &Csr, salt: u64| -> Result<TaskQueue> {
            let cfg = &fabric.config;
            Ok(if cfg.load_balance {
                build_task_queue(lists, cfg.task_size, task_seed(cfg.task_seed, rank, salt))?
                    .without_empty()
            } else {
                TaskQueue::per_vertex(lists).without_empty()
            })
        };
        let local_queue = queue(view.local_neighbors(), u64::MAX)?;
        let remote_queues = (0..fabric.n_workers())
            .map(|q| queue(view.remote_neighbors(q), q as u64))
            .collect::<Result<_>>()?;
        Ok(Worker {
            fabric,
            view,
            transport,
            local_queue,
            remote_queues,
            wire: WireStats::default(),
            mem: MemTracker::default(),
            metrics: WorkerMetrics::new(rank),
        })
    }

    pub fn rank(&self) -> usize {
        self.view.worker()
    }

    pub fn transport_mut(&mut self) -> &mut T {
        &mut self.transport
    }

    pub fn wire_stats_mut(&mut self) -> &mut WireStats {
        &mut self.wire
    }

    /// Metrics accumulated over every coloring run so far.
    pub fn metrics(&self) -> WorkerMetrics {
        let mut m = self.metrics.clone();
        m.absorb_wire(&self.wire);
        m.absorb_mem(&self.mem);
        m
    }

    /// Evaluates the plan under the coloring `seed` and returns this
    /// worker's share of the root sum (before the orbit division).
    pub fn run_coloring(&mut self, seed: u64) -> Result<f64> {
        let fabric = self.fabric;
        let plan = fabric.dp.plan();
        let k = plan.k();

        let start = Instant::now();
        let colors: Vec<u8> =
            self.view.vertices().iter().map(|&v| Coloring::color_of(seed, k, v)).collect();
        self.metrics.coloring_seconds += start.elapsed().as_secs_f64();

        let mut remaining = plan.consumer_counts();
        let mut tables: Vec<Option<CountTable>> = vec![None; plan.entries().len()];
        for &i in plan.evaluation_order() {
            let e = plan.entry(i);
            let table = match (e.active, e.passive) {
                (Some(a), Some(p)) => {
                    let active = tables[a].as_ref().expect("children come first");
                    let passive = tables[p].as_ref().expect("children come first");
                    let table = self.compute_entry(i, active, passive)?;
                    for child in [a, p] {
                        remaining[child] -= 1;
                        if remaining[child] == 0 {
                            if let Some(t) = tables[child].take() {
                                self.mem.free_table(t.bytes());
                            }
                        }
                    }
                    table
                }
                _ => {
                    let mut t = CountTable::zeros(self.view.n_local(), fabric.dp.row_len(i));
                    self.mem.alloc_table(t.bytes());
                    init_base_counts(&mut t, colors.iter().copied());
                    t
                }
            };
            tables[i] = Some(table);
        }
        let root = tables[plan.root_entry()].take().expect("root evaluated");
        let sum = treelet_core::kernel::root_sum(&root);
        self.mem.free_table(root.bytes());
        for t in tables.into_iter().flatten() {
            self.mem.free_table(t.bytes());
        }
        Ok(sum)
    }

    fn compute_entry(&mut self, i: usize, active: &CountTable, passive: &CountTable) -> Result<CountTable> {
        let fabric = self.fabric;
        let e = fabric.dp.plan().entry(i);
        let splits = fabric.dp.splits(i).expect("non-leaf entry has splits");
        let out = AtomicCountTable::zeros(self.view.n_local(), fabric.dp.row_len(i));
        self.mem.alloc_table(out.bytes());

        let local = LocalRows::new(passive, &fabric.partition);
        let job = Job {
            queue: &self.local_queue,
            lists: self.view.local_neighbors(),
            active,
            source: &local,
            splits,
            out: &out,
        };
        let outcome = run_phase(&job, &fabric.config).map_err(|err| self.protocol(i, err))?;
        self.metrics.local_compute_seconds += outcome.wall;
        self.metrics.lane_makespan_seconds += outcome.makespan;

        if fabric.n_workers() > 1 {
            match fabric.modes[i].mode {
                Mode::AllToAll => self.remote_all_to_all(i, active, passive, splits, &out)?,
                Mode::Pipeline => self.remote_pipeline(i, active, passive, splits, &out)?,
            }
        }
        Ok(out.finish(e.over_count))
    }

    fn protocol(&self, entry: usize, err: Error) -> Error {
        Error::Protocol {
            worker: self.rank(),
            entry,
            msg: err.to_string(),
        }
    }

    fn remote_all_to_all(
        &mut self,
        i: usize,
        active: &CountTable,
        passive: &CountTable,
        splits: &SplitTable,
        out: &AtomicCountTable,
    ) -> Result<()> {
        let fabric = self.fabric;
        let me = self.rank();
        let schedule = RingSchedule::new(fabric.n_workers())?;
        let row_len = passive.row_len();
        let part = &fabric.partition;
        let row_of = |v: VertexId| passive.row(part.local_slot(v));

        let start = Instant::now();
        for w in 1..=schedule.n_steps() {
            let to = schedule.send_to(me, w);
            let ids = fabric.exchange.requests(me, to);
            send_rows(&mut self.transport, to, ids, FULL_RANGE, row_of, fabric.config.chunk_bytes, &mut self.wire)
                .map_err(|err| self.stage_error(i, w, to, err))?;
        }
        let mut buffers = Vec::with_capacity(schedule.n_steps());
        for w in 1..=schedule.n_steps() {
            let from = schedule.recv_from(me, w);
            let mem = &mut self.mem;
            let mut counted = 0;
            let received = recv_rows(
                &mut self.transport,
                from,
                fabric.exchange.requests(from, me),
                row_len,
                &mut self.wire,
                |n| {
                    mem.alloc_buffer(n - counted);
                    counted = n;
                },
            );
            let (_, rows) = received.map_err(|err| self.stage_error(i, w, from, err))?;
            self.metrics.max_step_payload_bytes = self.metrics.max_step_payload_bytes.max(rows.bytes());
            buffers.push((from, rows));
        }
        self.metrics.communication_seconds += start.elapsed().as_secs_f64();

        for (from, rows) in &buffers {
            let job = Job {
                queue: &self.remote_queues[*from],
                lists: self.view.remote_neighbors(*from),
                active,
                source: rows,
                splits,
                out,
            };
            let outcome = run_phase(&job, &fabric.config).map_err(|err| self.protocol(i, err))?;
            self.metrics.remote_compute_seconds += outcome.wall;
            self.metrics.lane_makespan_seconds += outcome.makespan;
        }
        for (_, rows) in buffers {
            self.mem.free_buffer(rows.bytes());
        }
        Ok(())
    }

    fn stage_error(&self, entry: usize, stage: usize, peer: usize, err: Error) -> Error {
        Error::Protocol {
            worker: self.rank(),
            entry,
            msg: format!("stage {stage}, peer {peer}: {err}"),
        }
    }

    fn remote_pipeline(
        &mut self,
        i: usize,
        active: &CountTable,
        passive: &CountTable,
        splits: &SplitTable,
        out: &AtomicCountTable,
    ) -> Result<()> {
        let fabric = self.fabric;
        let cfg = &fabric.config;
        let me = self.rank();
        let schedule = RingSchedule::new(fabric.n_workers())?;
        let segments = cfg.pipeline_segments.max(1);
        let units: Vec<(usize, usize)> = (1..=schedule.n_steps())
            .flat_map(|w| (0..segments).map(move |s| (w, s)))
            .collect();
        let n_units = units.len();
        let row_len = passive.row_len();
        let part = &fabric.partition;
        let row_of = |v: VertexId| passive.row(part.local_slot(v));

        // Outgoing segment bounds for every step, from the rows that are
        // actually sent (nonzero ones).
        let send_ranges: Vec<Vec<Range<u64>>> = (1..=schedule.n_steps())
            .map(|w| {
                let ids = fabric.exchange.requests(me, schedule.send_to(me, w));
                let sent: Vec<VertexId> =
                    ids.iter().copied().filter(|&v| row_of(v).iter().any(|&x| x != 0.0)).collect();
                segment_ranges(&sent, segments)
            })
            .collect();
        let mut step_payload = vec![0usize; schedule.n_steps() + 1];

        let Worker {
            view,
            transport,
            wire,
            mem,
            metrics,
            ..
        } = self;
        let protocol = |stage: usize, peer: usize, err: Error| Error::Protocol {
            worker: me,
            entry: i,
            msg: format!("stage {stage}, peer {peer}: {err}"),
        };

        // Transfer of unit `u`: send our segment, receive the peer's.
        let transfer = |u: usize,
                        transport: &mut T,
                        wire: &mut WireStats,
                        mem: &mut MemTracker|
         -> Result<(usize, Range<u64>, RemoteRows)> {
            let (w, s) = units[u];
            let to = schedule.send_to(me, w);
            let from = schedule.recv_from(me, w);
            send_rows(
                transport,
                to,
                fabric.exchange.requests(me, to),
                send_ranges[w - 1][s].clone(),
                row_of,
                cfg.chunk_bytes,
                wire,
            )
            .map_err(|err| protocol(u, to, err))?;
            let mut counted = 0;
            let (range, rows) = recv_rows(transport, from, fabric.exchange.requests(from, me), row_len, wire, |n| {
                mem.alloc_buffer(n - counted);
                counted = n;
            })
            .map_err(|err| protocol(u, from, err))?;
            Ok((from, range, rows))
        };

        // Stage 0: cold start, transfer only.
        let start = Instant::now();
        let mut current = Some(transfer(0, transport, wire, mem)?);
        metrics.communication_seconds += start.elapsed().as_secs_f64();

        for stage in 1..=n_units {
            let (from, range, rows) = current.take().expect("unit received in the previous stage");
            step_payload[units[stage - 1].0] += rows.bytes();
            let queue = unit_queue(view.remote_neighbors(from), range, cfg, me, stage)?;
            let job = Job {
                queue: &queue,
                lists: view.remote_neighbors(from),
                active,
                source: &rows,
                splits,
                out,
            };
            let (computed, next, comm_seconds) = thread::scope(|scope| {
                let compute = scope.spawn(|| run_phase(&job, cfg));
                let comm_start = Instant::now();
                let next = if stage < n_units {
                    Some(transfer(stage, transport, wire, mem))
                } else {
                    None
                };
                let comm_seconds = comm_start.elapsed().as_secs_f64();
                let computed = compute.join().expect("computation lane panicked");
                (computed, next, comm_seconds)
            });
            let outcome = computed.map_err(|err| protocol(stage, from, err))?;
            metrics.remote_compute_seconds += outcome.wall;
            metrics.lane_makespan_seconds += outcome.makespan;
            if let Some(next) = next {
                current = Some(next?);
                metrics.communication_seconds += comm_seconds;
                metrics.record_overlap(stage, outcome.wall, comm_seconds);
            }
            mem.free_buffer(rows.bytes());
        }
        metrics.max_step_payload_bytes =
            metrics.max_step_payload_bytes.max(step_payload.into_iter().max().unwrap_or(0));
        Ok(())
    }
}

fn task_seed(base: u64, rank: usize, salt: u64) -> u64 {
    treelet_core::hash::hash_pair(treelet_core::hash::hash_pair(base, rank as u64), salt)
}

fn unit_queue(lists: &Csr, range: Range<u64>, cfg: &FabricConfig, rank: usize, stage: usize) -> Result<TaskQueue> {
    Ok(if cfg.load_balance {
        build_task_queue_within(lists, range, cfg.task_size, task_seed(cfg.task_seed, rank, stage as u64))?
            .without_empty()
    } else {
        TaskQueue::per_vertex_within(lists, range).without_empty()
    })
}

/// One compute phase: every task of `queue` over `lists`, reading passive
/// rows from `source` and adding into `out`.
struct Job<'a, S: ?Sized> {
    queue: &'a TaskQueue,
    lists: &'a Csr,
    active: &'a CountTable,
    source: &'a S,
    splits: &'a SplitTable,
    out: &'a AtomicCountTable,
}

impl<S: RowSource + Sync + ?Sized> Job<'_, S> {
    fn execute(&self, task: &Task, scratch: &mut [f64]) -> Result<()> {
        scratch.fill(0.0);
        let neighbors = &self.lists.entries()[task.range()];
        let row = task.row as usize;
        accumulate_neighbors(self.splits, self.active.row(row), neighbors, self.source, scratch)?;
        if scratch.iter().any(|&x| x != 0.0) {
            self.out.add_row(row, scratch);
        }
        Ok(())
    }
}

struct PhaseOutcome {
    wall: f64,
    /// Busiest lane's CPU time (threads) or the emulated lane makespan.
    makespan: f64,
}

fn run_phase<S: RowSource + Sync + ?Sized>(job: &Job<'_, S>, cfg: &FabricConfig) -> Result<PhaseOutcome> {
    let start = Instant::now();
    let lanes = cfg.lanes.max(1);
    let row_len = job.out.row_len();
    let tasks = job.queue.tasks();
    let makespan = match cfg.lane_execution {
        LaneExecution::Threads => {
            let next = AtomicUsize::new(0);
            let lane = |lane: usize| -> Result<f64> {
                let cpu = thread_cpu_seconds();
                let mut scratch = vec![0.0; row_len];
                if cfg.load_balance {
                    loop {
                        let t = next.fetch_add(1, Ordering::Relaxed);
                        let Some(task) = tasks.get(t) else { break };
                        job.execute(task, &mut scratch)?;
                    }
                } else {
                    for task in &tasks[job.queue.static_block(lane, lanes)] {
                        job.execute(task, &mut scratch)?;
                    }
                }
                Ok(thread_cpu_seconds() - cpu)
            };
            let times: Vec<Result<f64>> = if lanes == 1 {
                vec![lane(0)]
            } else {
                thread::scope(|scope| {
                    let handles: Vec<_> = (0..lanes).map(|l| scope.spawn(move || lane(l))).collect();
                    handles.into_iter().map(|h| h.join().expect("computation lane panicked")).collect()
                })
            };
            let mut worst = 0.0f64;
            for t in times {
                worst = worst.max(t?);
            }
            worst
        }
        LaneExecution::Emulated => {
            let mut scratch = vec![0.0; row_len];
            let blocks = (!cfg.load_balance)
                .then(|| (0..lanes).map(|l| job.queue.static_block(l, lanes)).collect());
            emulate_lanes(tasks.len(), lanes, blocks, |t| {
                let cpu = thread_cpu_seconds();
                job.execute(&tasks[t], &mut scratch)?;
                Ok(thread_cpu_seconds() - cpu)
            })?
        }
    };
    Ok(PhaseOutcome {
        wall: start.elapsed().as_secs_f64(),
        makespan,
    })
}

/// Runs tasks one at a time in the order parallel lanes would reach them:
/// the lane with the least accumulated time goes next, taking the next task
/// of its block (`blocks`) or of the shared queue. Returns the busiest
/// lane's total.
pub fn emulate_lanes<F>(n_tasks: usize, lanes: usize, blocks: Option<Vec<Range<usize>>>, mut run: F) -> Result<f64>
where
    F: FnMut(usize) -> Result<f64>,
{
    let lanes = blocks.as_ref().map_or(lanes.max(1), Vec::len);
    let mut busy = vec![0.0f64; lanes];
    let mut blocks = blocks;
    let mut shared = 0..n_tasks;
    loop {
        let ready = (0..lanes)
            .filter(|&l| match &blocks {
                Some(b) => !b[l].is_empty(),
                None => !shared.is_empty(),
            })
            .min_by(|&a, &b| busy[a].total_cmp(&busy[b]));
        let Some(lane) = ready else { break };
        let task = match &mut blocks {
            Some(b) => b[lane].next(),
            None => shared.next(),
        }
        .expect("lane has work");
        busy[lane] += run(task)?;
    }
    Ok(busy.into_iter().fold(0.0, f64::max))
}
