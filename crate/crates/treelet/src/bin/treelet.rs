use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use treelet::error::{Error, Result};
use treelet::fabric::{FabricConfig, LaneExecution, DEFAULT_SEGMENTS, DEFAULT_TASK_SIZE};
use treelet::hockney::{fit_hockney, DEFAULT_FIT_SIZES, DEFAULT_HELD_OUT};
use treelet::io::{load_edge_list, write_edge_list};
use treelet::runner::{run_estimation, run_estimation_as_rank, ConfigEcho, RunConfig, TransportKind};
use treelet::templates::{calibrated_index_set, resolve};
use treelet::transport::SocketEndpoint;
use treelet_core::cost::{cost_metrics, predict_costs, GraphStats, IndexSet};
use treelet_core::plan::{partition_template, CutPolicy};
use treelet_core::rmat::generate_rmat;
use treelet_core::schedule::DEFAULT_ADAPTIVE_THRESHOLD;
use treelet_core::template::RootChoice;
use treelet_core::{HockneyParams, ModePolicy};

/// Estimates the number of copies of a tree template in a graph by
/// distributed color coding.
#[derive(Parser, Debug)]
#[command(version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Writes a synthetic skewed graph as an edge list.
    Generate(GenerateArgs),
    /// Prints cost metrics of a template and, given a graph, the predicted
    /// per-step costs.
    Costs(CostsArgs),
    /// Fits latency and inverse bandwidth of a transport.
    FitHockney(FitArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Naive,
    Pipeline,
    Adaptive,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TransportArg {
    Inproc,
    Socket,
}

impl From<TransportArg> for TransportKind {
    fn from(t: TransportArg) -> Self {
        match t {
            TransportArg::Inproc => TransportKind::Inproc,
            TransportArg::Socket => TransportKind::Socket,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LaneArg {
    Threads,
    Emulated,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Edge list file.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Bundled template name (e.g. u5-2) or template file.
    #[arg(long)]
    template: Option<String>,
    /// Template root: first, center or a vertex number.
    #[arg(long, default_value = "first", value_parser = parse_root)]
    root: RootChoice,
    #[arg(long, value_enum, default_value = "adaptive")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "on")]
    load_balance: Switch,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, value_enum, default_value = "inproc")]
    transport: TransportArg,
    #[arg(long, default_value_t = DEFAULT_TASK_SIZE)]
    task_size: usize,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Overrides the iteration count derived from epsilon and delta.
    #[arg(long)]
    niter: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0x9e37)]
    partition_seed: u64,
    /// Intensity at which adaptive mode pipelines a sub-template.
    #[arg(long, default_value_t = DEFAULT_ADAPTIVE_THRESHOLD)]
    adaptive_threshold: f64,
    /// Latency in seconds, for cost predictions.
    #[arg(long, requires = "beta")]
    alpha: Option<f64>,
    /// Seconds per byte, for cost predictions.
    #[arg(long, requires = "alpha")]
    beta: Option<f64>,
    /// Computation lanes per worker (default: available cores).
    #[arg(long)]
    lanes: Option<usize>,
    #[arg(long, value_enum, default_value = "threads")]
    lane_execution: LaneArg,
    /// Pieces each pipeline step's message is cut into.
    #[arg(long, default_value_t = DEFAULT_SEGMENTS)]
    segments: usize,
    /// Metrics JSON destination (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long)]
    vertices: usize,
    #[arg(long)]
    edges: usize,
    /// 0 gives a uniform graph, values towards 1 concentrate edges on few
    /// vertices.
    #[arg(long, default_value_t = 0.5)]
    skew: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CostsArgs {
    #[arg(long)]
    template: String,
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    workers: usize,
    #[arg(long, default_value_t = 1e-5)]
    alpha: f64,
    #[arg(long, default_value_t = 1e-9)]
    beta: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long, value_enum, default_value = "socket")]
    transport: TransportArg,
    #[arg(long, default_value_t = 15)]
    reps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_root(s: &str) -> std::result::Result<RootChoice, String> {
    match s {
        "first" => Ok(RootChoice::First),
        "center" => Ok(RootChoice::Center),
        n => n
            .parse()
            .map(RootChoice::Vertex)
            .map_err(|_| format!("expected first, center or a vertex number, got {n:?}")),
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    match out {
        Some(path) => std::fs::write(path, text + "\n").map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run(args: RunArgs) -> Result<()> {
    let graph_path = args.graph.ok_or_else(|| Error::Config("--graph is required".into()))?;
    let template_name = args.template.ok_or_else(|| Error::Config("--template is required".into()))?;
    let (graph, _) = load_edge_list(&graph_path)?;
    let template = resolve(&template_name, args.root)?;
    let policy = match args.mode {
        ModeArg::Naive => ModePolicy::Naive,
        ModeArg::Pipeline => ModePolicy::Pipeline,
        ModeArg::Adaptive => ModePolicy::Adaptive {
            threshold: args.adaptive_threshold,
        },
    };
    let defaults = FabricConfig::default();
    let config = RunConfig {
        workers: args.workers,
        transport: args.transport.into(),
        fabric: FabricConfig {
            policy,
            load_balance: matches!(args.load_balance, Switch::On),
            task_size: args.task_size,
            lanes: args.lanes.unwrap_or(defaults.lanes),
            lane_execution: match args.lane_execution {
                LaneArg::Threads => LaneExecution::Threads,
                LaneArg::Emulated => LaneExecution::Emulated,
            },
            pipeline_segments: args.segments,
            ..defaults
        },
        epsilon: args.epsilon,
        delta: args.delta,
        niter: args.niter,
        seed: args.seed,
        partition_seed: args.partition_seed,
        cut_policy: CutPolicy::default(),
        hockney: match (args.alpha, args.beta) {
            (Some(a), Some(b)) => Some(HockneyParams::new(a, b)?),
            _ => None,
        },
    };
    let mut report = match SocketEndpoint::from_env()? {
        Some(endpoint) => run_estimation_as_rank(&graph, &template, &config, endpoint)?,
        None => run_estimation(&graph, &template, &config)?,
    };
    report.config = ConfigEcho {
        graph: Some(graph_path.display().to_string()),
        template: Some(template_name),
        ..report.config
    };
    emit(&report, args.out.as_deref())
}

fn generate(args: GenerateArgs) -> Result<()> {
    let g = generate_rmat(args.vertices, args.edges, args.skew, args.seed)?;
    let comment = format!(
        "synthetic skewed graph: {} vertices, {} edges requested, skew {}, seed {}",
        args.vertices, args.edges, args.skew, args.seed
    );
    write_edge_list(&args.out, &g, &comment)?;
    emit(
        &json!({
            "out": args.out.display().to_string(),
            "vertices": g.n_vertices(),
            "edges": g.n_edges(),
            "max_degree": g.degree_stats().max,
        }),
        None,
    )
}

fn set_name(set: IndexSet) -> String {
    format!("{:?}/{:?}", set.selection, set.counting)
}

fn costs(args: CostsArgs) -> Result<()> {
    let template = resolve(&args.template, RootChoice::First)?;
    let plan = partition_template(&template, CutPolicy::default());
    let k = plan.k();
    let calibrated = calibrated_index_set();
    let variants: Vec<_> = IndexSet::all_variants()
        .into_iter()
        .map(|set| {
            let c = cost_metrics(&plan, k, set);
            json!({
                "index_set": set_name(set),
                "memory": c.memory,
                "computation": c.computation,
                "intensity": c.intensity(),
            })
        })
        .collect();
    let c = cost_metrics(&plan, k, calibrated);
    let predicted = match &args.graph {
        Some(path) => {
            let (g, _) = load_edge_list(path)?;
            let params = HockneyParams::new(args.alpha, args.beta)?;
            let steps = predict_costs(&plan, GraphStats::of(&g), args.workers, params, 0.0)?;
            Some(
                steps
                    .iter()
                    .map(|s| {
                        json!({
                            "entry": s.entry,
                            "size": plan.entry(s.entry).size,
                            "remote_volume": s.remote_volume,
                            "computation": s.computation,
                            "communication_seconds": s.communication,
                            "peak_memory_bytes": s.peak_memory,
                        })
                    })
                    .collect::<Vec<_>>(),
            )
        }
        None => None,
    };
    emit(
        &json!({
            "template": args.template,
            "vertices": k,
            "calibrated_index_set": set_name(calibrated),
            "memory": c.memory,
            "computation": c.computation,
            "intensity": c.intensity(),
            "variants": variants,
            "workers": args.workers,
            "predicted": predicted,
        }),
        args.out.as_deref(),
    )
}

fn fit(args: FitArgs) -> Result<()> {
    let fit = fit_hockney(args.transport.into(), &DEFAULT_FIT_SIZES, DEFAULT_HELD_OUT, args.reps)?;
    emit(&fit, args.out.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Some(Command::Generate(a)) => generate(a),
        Some(Command::Costs(a)) => costs(a),
        Some(Command::FitHockney(a)) => fit(a),
        None => run(cli.run),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            println!("{}", serde_json::to_string_pretty(&body).expect("error JSON"));
            ExitCode::FAILURE
        }
    }
}
