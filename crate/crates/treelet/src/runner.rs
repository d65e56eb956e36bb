//! Estimation runs: worker fabric set-up, per-coloring reduction, the
//! median-of-means estimate and the machine-readable report.

use std::thread;
use std::time::Instant;

use serde::Serialize;

use treelet_core::cost::{predict_costs, GraphStats};
use treelet_core::estimator::{estimate, EstimatorConfig};
use treelet_core::kernel::DpContext;
use treelet_core::plan::{partition_template, CutPolicy};
use treelet_core::{Graph, HockneyParams, Mode, ModePolicy, Partition, Template, TemplatePlan};

use crate::error::{Error, Result};
use crate::fabric::{Fabric, FabricConfig, LaneExecution, Worker};
use crate::metrics::{StageOverlap, WorkerMetrics};
use crate::transport::{
    inproc_mesh, local_socket_mesh, recv_values, send_values, SocketEndpoint, Transport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportKind {
    #[default]
    Inproc,
    Socket,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub workers: usize,
    pub transport: TransportKind,
    pub fabric: FabricConfig,
    pub epsilon: f64,
    pub delta: f64,
    pub niter: Option<usize>,
    pub seed: u64,
    /// Seed of the random vertex-to-worker assignment.
    pub partition_seed: u64,
    pub cut_policy: CutPolicy,
    pub hockney: Option<HockneyParams>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            workers: 1,
            transport: TransportKind::Inproc,
            fabric: FabricConfig::default(),
            epsilon: 0.1,
            delta: 0.1,
            niter: None,
            seed: 1,
            partition_seed: 0x9e37,
            cut_policy: CutPolicy::default(),
            hockney: None,
        }
    }
}

impl RunConfig {
    pub fn estimator(&self, k: usize) -> Result<EstimatorConfig> {
        let config = EstimatorConfig::new(self.epsilon, self.delta, k, self.seed)?;
        Ok(match self.niter {
            Some(n) => config.with_niter(n)?,
            None => config,
        })
    }
}

/// A prepared run: the plan, the partition and the exchange plan, reused
/// for every coloring.
pub struct Engine<'g> {
    fabric: Fabric<'g>,
    transport: TransportKind,
}

/// Colorful totals of a batch of colorings with the metrics of each worker.
#[derive(Debug, Clone)]
pub struct Batch {
    pub totals: Vec<f64>,
    pub workers: Vec<WorkerMetrics>,
    pub wall_seconds: f64,
}

impl<'g> Engine<'g> {
    pub fn new(graph: &'g Graph, template: &Template, config: &RunConfig) -> Result<Engine<'g>> {
        let plan = partition_template(template, config.cut_policy);
        Engine::with_plan(graph, plan, config)
    }

    pub fn with_plan(graph: &'g Graph, plan: TemplatePlan, config: &RunConfig) -> Result<Engine<'g>> {
        if config.workers == 0 {
            return Err(Error::Config("at least one worker is required".into()));
        }
        let partition = Partition::random(graph, config.workers, config.partition_seed)?;
        let fabric = Fabric::new(graph, partition, DpContext::new(plan)?, config.fabric)?;
        Ok(Engine {
            fabric,
            transport: config.transport,
        })
    }

    pub fn fabric(&self) -> &Fabric<'g> {
        &self.fabric
    }

    pub fn plan(&self) -> &TemplatePlan {
        self.fabric.dp().plan()
    }

    /// Runs every coloring seed on all workers of this process and returns
    /// the colorful totals in seed order.
    pub fn colorful_totals(&self, seeds: &[u64]) -> Result<Batch> {
        let p = self.fabric.n_workers();
        let start = Instant::now();
        let outcomes = match self.transport {
            TransportKind::Inproc => self.run_workers(inproc_mesh(p), seeds),
            TransportKind::Socket => self.run_workers(local_socket_mesh(p)?, seeds),
        };
        let mut partials = Vec::with_capacity(p);
        let mut workers = Vec::with_capacity(p);
        let mut first_error = None;
        for outcome in outcomes {
            match outcome {
                Ok((values, metrics)) => {
                    partials.push(values);
                    workers.push(metrics);
                }
                // A failing worker makes its peers fail with a hang-up;
                // report the root cause when there is one.
                Err(e) => match (&first_error, &e) {
                    (None, _) | (Some(Error::Transport(_)), Error::Protocol { .. }) => first_error = Some(e),
                    _ => {}
                },
            }
        }
        if let Some(e) = first_error {
            return Err(e);
        }
        let orbit = self.plan().root_orbit() as f64;
        // Rank order keeps the floating-point sum reproducible.
        let totals = (0..seeds.len())
            .map(|i| partials.iter().map(|v| v[i]).sum::<f64>() / orbit)
            .collect();
        Ok(Batch {
            totals,
            workers,
            wall_seconds: start.elapsed().as_secs_f64(),
        })
    }

    fn run_workers<T: Transport>(&self, endpoints: Vec<T>, seeds: &[u64]) -> Vec<Result<(Vec<f64>, WorkerMetrics)>> {
        thread::scope(|scope| {
            let handles: Vec<_> = endpoints
                .into_iter()
                .map(|ep| {
                    scope.spawn(move || {
                        let mut worker = Worker::new(&self.fabric, ep)?;
                        let values = seeds.iter().map(|&s| worker.run_coloring(s)).collect::<Result<Vec<_>>>()?;
                        Ok((values, worker.metrics()))
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err(Error::Transport("worker thread panicked".into()))))
                .collect()
        })
    }
}

/// Full estimation with every worker in this process.
pub fn run_estimation(graph: &Graph, template: &Template, config: &RunConfig) -> Result<RunReport> {
    let engine = Engine::new(graph, template, config)?;
    let est = config.estimator(template.n_vertices())?;
    let seeds: Vec<u64> = (0..est.niter()).map(|i| est.iteration_seed(i)).collect();
    let batch = engine.colorful_totals(&seeds)?;
    finish_report(&engine, graph, config, &est, batch)
}

/// Estimation as one rank of a multi-process socket mesh. Every rank
/// returns the same estimate; metrics cover this rank only.
pub fn run_estimation_as_rank(
    graph: &Graph,
    template: &Template,
    config: &RunConfig,
    endpoint: SocketEndpoint,
) -> Result<RunReport> {
    let config = RunConfig {
        workers: endpoint.n_workers(),
        transport: TransportKind::Socket,
        ..config.clone()
    };
    let engine = Engine::new(graph, template, &config)?;
    let est = config.estimator(template.n_vertices())?;
    let start = Instant::now();
    let mut worker = Worker::new(engine.fabric(), endpoint)?;
    let mut partial = Vec::with_capacity(est.niter());
    for i in 0..est.niter() {
        partial.push(worker.run_coloring(est.iteration_seed(i))?);
    }
    let rank = worker.rank();
    let p = config.workers;
    let reduce = |worker: &mut Worker<'_, '_, SocketEndpoint>| -> Result<Vec<f64>> {
        let mut wire = *worker.wire_stats_mut();
        let result = if rank == 0 {
            let mut sums = partial.clone();
            for from in 1..p {
                let theirs = recv_values(worker.transport_mut(), from, &mut wire)?;
                if theirs.len() != sums.len() {
                    return Err(Error::Transport(format!("rank {from} sent {} values", theirs.len())));
                }
                for (s, x) in sums.iter_mut().zip(theirs) {
                    *s += x;
                }
            }
            for to in 1..p {
                send_values(worker.transport_mut(), to, &sums, &mut wire)?;
            }
            sums
        } else {
            send_values(worker.transport_mut(), 0, &partial, &mut wire)?;
            recv_values(worker.transport_mut(), 0, &mut wire)?
        };
        *worker.wire_stats_mut() = wire;
        Ok(result)
    };
    let sums = reduce(&mut worker)?;
    let orbit = engine.plan().root_orbit() as f64;
    let batch = Batch {
        totals: sums.iter().map(|s| s / orbit).collect(),
        workers: vec![worker.metrics()],
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    drop(worker);
    finish_report(&engine, graph, &config, &est, batch)
}

fn finish_report(
    engine: &Engine<'_>,
    graph: &Graph,
    config: &RunConfig,
    est: &EstimatorConfig,
    batch: Batch,
) -> Result<RunReport> {
    let totals = batch.totals.clone();
    let estimate = estimate(est, |i, _| Ok(totals[i]))?;
    let plan = engine.plan();
    let workers = batch.workers;
    let max_of = |f: &dyn Fn(&WorkerMetrics) -> f64| workers.iter().map(f).fold(0.0, f64::max);
    let phases = PhaseSeconds {
        coloring: max_of(&|w| w.coloring_seconds),
        local_compute: max_of(&|w| w.local_compute_seconds),
        remote_compute: max_of(&|w| w.remote_compute_seconds),
        communication: max_of(&|w| w.communication_seconds),
        recv_wait: max_of(&|w| w.recv_wait_seconds),
        total_wall: batch.wall_seconds,
    };
    let compute = max_of(&|w| w.compute_seconds());
    let busy = compute + phases.communication;
    let comm_ratio = if busy > 0.0 { phases.communication / busy } else { 0.0 };
    let max_bytes = |f: &dyn Fn(&WorkerMetrics) -> usize| workers.iter().map(f).max().unwrap_or(0);
    let peak = PeakBytes {
        tables: max_bytes(&|w| w.peak_table_bytes),
        buffers: max_bytes(&|w| w.peak_buffer_bytes),
        total: max_bytes(&|w| w.peak_total_bytes),
        max_table: max_bytes(&|w| w.max_table_bytes),
        max_step_payload: max_bytes(&|w| w.max_step_payload_bytes),
    };
    let predicted = match config.hockney {
        Some(params) => Some(
            predict_costs(plan, GraphStats::of(graph), config.workers, params, 0.0)?
                .into_iter()
                .map(|s| PredictedStep {
                    entry: s.entry,
                    remote_volume: s.remote_volume,
                    computation: s.computation,
                    communication_seconds: s.communication,
                    peak_memory_bytes: s.peak_memory,
                })
                .collect(),
        ),
        None => None,
    };
    Ok(RunReport {
        estimate: estimate.value,
        values: estimate.values,
        colorful_totals: batch.totals,
        group_means: estimate.group_means,
        niter: est.niter(),
        groups: est.groups(),
        graph: GraphInfo {
            vertices: graph.n_vertices(),
            edges: graph.n_edges(),
            max_degree: graph.degree_stats().max,
        },
        template: TemplateInfo {
            vertices: plan.k(),
            root_orbit: plan.root_orbit(),
            entries: plan.entries().len(),
            modes: engine
                .fabric()
                .modes()
                .iter()
                .filter(|m| !plan.entry(m.entry).is_leaf())
                .map(|m| EntryReport {
                    entry: m.entry,
                    size: m.size,
                    intensity: m.intensity,
                    mode: mode_name(m.mode),
                })
                .collect(),
        },
        phases,
        comm_ratio,
        overlap: merge_overlap(&workers),
        peak_bytes: peak,
        lane_makespan_seconds: max_of(&|w| w.lane_makespan_seconds),
        workers,
        predicted,
        config: ConfigEcho::from_config(config),
    })
}

fn merge_overlap(workers: &[WorkerMetrics]) -> Vec<StageOverlap> {
    let stages = workers.iter().map(|w| w.overlap.len()).max().unwrap_or(0);
    (1..=stages)
        .map(|stage| {
            let mut merged = StageOverlap {
                stage,
                min: 1.0,
                ..StageOverlap::default()
            };
            for o in workers.iter().filter_map(|w| w.overlap.get(stage - 1)) {
                let n = merged.samples + o.samples;
                if n > 0 {
                    merged.mean = (merged.mean * merged.samples as f64 + o.mean * o.samples as f64) / n as f64;
                }
                merged.min = merged.min.min(o.min);
                merged.samples = n;
            }
            merged
        })
        .collect()
}

pub fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::AllToAll => "all-to-all",
        Mode::Pipeline => "pipeline",
    }
}

pub fn policy_name(policy: ModePolicy) -> &'static str {
    match policy {
        ModePolicy::Naive => "naive",
        ModePolicy::Pipeline => "pipeline",
        ModePolicy::Adaptive { .. } => "adaptive",
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub estimate: f64,
    /// Scaled per-coloring estimates.
    pub values: Vec<f64>,
    /// Colorful copies found under each coloring.
    pub colorful_totals: Vec<f64>,
    pub group_means: Vec<f64>,
    pub niter: usize,
    pub groups: usize,
    pub graph: GraphInfo,
    pub template: TemplateInfo,
    pub phases: PhaseSeconds,
    /// Communication over communication plus computation, slowest worker.
    pub comm_ratio: f64,
    pub overlap: Vec<StageOverlap>,
    pub peak_bytes: PeakBytes,
    pub lane_makespan_seconds: f64,
    pub workers: Vec<WorkerMetrics>,
    pub predicted: Option<Vec<PredictedStep>>,
    pub config: ConfigEcho,
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphInfo {
    pub vertices: usize,
    pub edges: usize,
    pub max_degree: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TemplateInfo {
    pub vertices: usize,
    pub root_orbit: usize,
    pub entries: usize,
    pub modes: Vec<EntryReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntryReport {
    pub entry: usize,
    pub size: usize,
    pub intensity: f64,
    pub mode: &'static str,
}

/// Slowest worker's time in each phase, summed over colorings.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PhaseSeconds {
    pub coloring: f64,
    pub local_compute: f64,
    pub remote_compute: f64,
    pub communication: f64,
    pub recv_wait: f64,
    pub total_wall: f64,
}

/// Largest accounted figures over workers.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PeakBytes {
    pub tables: usize,
    pub buffers: usize,
    pub total: usize,
    pub max_table: usize,
    pub max_step_payload: usize,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PredictedStep {
    pub entry: usize,
    pub remote_volume: f64,
    pub computation: f64,
    pub communication_seconds: f64,
    pub peak_memory_bytes: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub graph: Option<String>,
    pub template: Option<String>,
    pub workers: usize,
    pub transport: TransportKind,
    pub mode: &'static str,
    pub adaptive_threshold: Option<f64>,
    pub load_balance: bool,
    pub task_size: usize,
    pub lanes: usize,
    pub lane_execution: &'static str,
    pub segments: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub niter: Option<usize>,
    pub seed: u64,
    pub partition_seed: u64,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

impl ConfigEcho {
    pub fn from_config(c: &RunConfig) -> ConfigEcho {
        ConfigEcho {
            graph: None,
            template: None,
            workers: c.workers,
            transport: c.transport,
            mode: policy_name(c.fabric.policy),
            adaptive_threshold: match c.fabric.policy {
                ModePolicy::Adaptive { threshold } => Some(threshold),
                _ => None,
            },
            load_balance: c.fabric.load_balance,
            task_size: c.fabric.task_size,
            lanes: c.fabric.lanes,
            lane_execution: match c.fabric.lane_execution {
                LaneExecution::Threads => "threads",
                LaneExecution::Emulated => "emulated",
            },
            segments: c.fabric.pipeline_segments,
            epsilon: c.epsilon,
            delta: c.delta,
            niter: c.niter,
            seed: c.seed,
            partition_seed: c.partition_seed,
            alpha: c.hockney.map(|h| h.alpha),
            beta: c.hockney.map(|h| h.beta),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use treelet_core::oracle::count_embeddings_exact;

    fn small_graph() -> Graph {
        let edges = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (3, 4), (4, 5), (5, 6), (6, 3)];
        Graph::from_edges(7, &edges).unwrap().0
    }

    fn config(workers: usize, policy: ModePolicy) -> RunConfig {
        RunConfig {
            workers,
            niter: Some(40),
            fabric: FabricConfig {
                policy,
                lanes: 1,
                ..FabricConfig::default()
            },
            ..RunConfig::default()
        }
    }

    #[test]
    fn same_seed_same_estimate() {
        let g = small_graph();
        let t = Template::path(3);
        let a = run_estimation(&g, &t, &config(2, ModePolicy::Pipeline)).unwrap();
        let b = run_estimation(&g, &t, &config(2, ModePolicy::Pipeline)).unwrap();
        let c = run_estimation(&g, &t, &config(3, ModePolicy::Naive)).unwrap();
        assert_eq!(a.estimate, b.estimate);
        assert_eq!(a.colorful_totals, c.colorful_totals);
    }

    #[test]
    fn single_worker_has_no_communication() {
        let g = small_graph();
        let r = run_estimation(&g, &Template::path(3), &config(1, ModePolicy::Naive)).unwrap();
        assert_eq!(r.phases.communication, 0.0);
        assert_eq!(r.comm_ratio, 0.0);
        assert_eq!(r.peak_bytes.buffers, 0);
        assert!(r.peak_bytes.total >= r.peak_bytes.max_table);
    }

    #[test]
    fn estimate_near_exact_on_small_graph() {
        let g = small_graph();
        let t = Template::path(3);
        let exact = count_embeddings_exact(&g, &t).unwrap() as f64;
        let mut c = config(2, ModePolicy::default());
        c.niter = Some(2000);
        let r = run_estimation(&g, &t, &c).unwrap();
        assert!((r.estimate - exact).abs() < 0.15 * exact, "{} vs {exact}", r.estimate);
    }

    #[test]
    fn no_copies_gives_zero() {
        let g = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap().0;
        let r = run_estimation(&g, &Template::path(4), &config(2, ModePolicy::Naive)).unwrap();
        assert_eq!(r.estimate, 0.0);
    }

    #[test]
    fn report_serializes_every_field() {
        let g = small_graph();
        let mut c = config(2, ModePolicy::default());
        c.hockney = Some(HockneyParams::new(1e-6, 1e-9).unwrap());
        let r = run_estimation(&g, &Template::star(3), &c).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        for key in ["estimate", "phases", "comm_ratio", "overlap", "peak_bytes", "workers", "predicted", "config"] {
            assert!(!json[key].is_null(), "{key} missing");
        }
    }
}
