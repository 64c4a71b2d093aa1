use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cocluster::graph::write_edge_list;
use cocluster::metrics::{
    accl, cluster_size_histogram, cluster_sizes, cross_cluster_edges, gini, SizeScope,
};
use cocluster::objective::objective_pairsum;
use cocluster::sketch::{param_count, read_assignment, write_assignment, SketchAssignment};
use cocluster::synth::{
    brute_force_optimum, planted_bipartite, random_bipartite, PlantedConfig, DEFAULT_MAX_NODES,
};
use cocluster::{
    build_graph, cluster, compute_weights, parse_edge_list, BipartiteGraph, Error, NodeOrder,
    SolverConfig, WeightScheme,
};

#[derive(Parser)]
#[command(
    name = "cocluster",
    version,
    about = "Balanced user-item co-clustering for embedding table compression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster an edge list and write a sketch assignment.
    Cluster(ClusterArgs),
    /// Report diagnostics for an assignment against its edge list.
    Metrics(MetricsArgs),
    /// Generate a synthetic edge list.
    Synth(SynthArgs),
    /// Exhaustively maximize the objective on a tiny graph.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Hws,
    Modularity,
    CpmUnit,
    ReverseHws,
}

impl From<SchemeArg> for WeightScheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Hws => WeightScheme::Hws,
            SchemeArg::Modularity => WeightScheme::ModularityDegree,
            SchemeArg::CpmUnit => WeightScheme::CpmUnit,
            SchemeArg::ReverseHws => WeightScheme::ReverseHws,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    Index,
    Shuffle,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    edges: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    gamma: f64,
    /// Total codebook rows K_user + K_item.
    #[arg(long, conflicts_with = "ratio", required_unless_present = "ratio")]
    budget: Option<usize>,
    /// Codebook rows as a fraction of users + items.
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, default_value_t = cocluster::solver::DEFAULT_MAX_ITERS)]
    max_iters: usize,
    #[arg(long, value_enum, default_value = "hws")]
    scheme: SchemeArg,
    #[arg(long)]
    scu: bool,
    #[arg(long)]
    scu_distinct: bool,
    #[arg(long)]
    strict_budget: bool,
    #[arg(long, value_enum, default_value = "index")]
    order: OrderArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    edges: PathBuf,
    #[arg(long)]
    assignment: PathBuf,
    /// Defaults to the gamma recorded in the assignment header.
    #[arg(long)]
    gamma: Option<f64>,
    /// Defaults to the scheme recorded in the assignment header.
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 2)]
    blocks: usize,
    #[arg(long, default_value_t = 3)]
    users_per_block: usize,
    #[arg(long, default_value_t = 3)]
    items_per_block: usize,
    /// Within-block edge probability.
    #[arg(long, default_value_t = 1.0)]
    pu: f64,
    /// Cross-block edge probability.
    #[arg(long, default_value_t = 0.0)]
    po: f64,
    /// Sample a uniform random graph instead of a planted one.
    #[arg(long, requires_all = ["n_users", "n_items"])]
    n_edges: Option<usize>,
    #[arg(long)]
    n_users: Option<usize>,
    #[arg(long)]
    n_items: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Edge list destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Planted block per node as `U|I <tab> token <tab> block`.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    edges: PathBuf,
    #[arg(long)]
    gamma: f64,
    #[arg(long, value_enum, default_value = "hws")]
    scheme: SchemeArg,
    #[arg(long, default_value_t = DEFAULT_MAX_NODES)]
    max_nodes: usize,
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Validation(_) | Error::SizeCap { .. } => 2,
            Error::BudgetNotMet { .. } => 4,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Error::Io(e).into()
    }
}

fn config_error(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path).map(BufReader::new).map_err(|e| Failure {
        code: 1,
        message: format!("{}: {e}", path.display()),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure {
        code: 1,
        message: format!("{}: {e}", path.display()),
    })
}

fn load_graph(path: &Path) -> Result<BipartiteGraph, Failure> {
    let edges = parse_edge_list(open(path)?).map_err(|e| Failure {
        code: 1,
        message: format!("{}: {e}", path.display()),
    })?;
    Ok(build_graph(&edges)?)
}

fn print_json(value: &Value) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    serde_json::to_writer(&mut out, value).map_err(io::Error::from)?;
    writeln!(out)?;
    Ok(())
}

fn cmd_cluster(args: ClusterArgs) -> Result<(), Failure> {
    if args.scu && args.dim.is_none() {
        return Err(config_error("--scu requires --dim"));
    }
    let start = Instant::now();
    let graph = load_graph(&args.edges)?;
    let budget = match (args.budget, args.ratio) {
        (Some(b), _) => b,
        (None, Some(r)) => {
            if !(r > 0.0 && r <= 1.0) {
                return Err(config_error(format!("--ratio must lie in (0, 1], got {r}")));
            }
            if r < 0.2 {
                eprintln!("warning: compression ratio {r} is below 1/5; clustering quality may approach random hashing");
            }
            ((r * graph.n_nodes() as f64).floor() as usize).max(1)
        }
        (None, None) => unreachable!("clap requires --budget or --ratio"),
    };
    let config = SolverConfig {
        gamma: args.gamma,
        budget,
        dim: args.dim,
        max_iters: args.max_iters,
        scheme: args.scheme.into(),
        scu: args.scu,
        order: match args.order {
            OrderArg::Index => NodeOrder::ByIndex,
            OrderArg::Shuffle => NodeOrder::ShuffledEachIter(args.seed),
        },
        scu_distinct: args.scu_distinct,
        strict_budget: args.strict_budget,
    };
    let outcome = cluster(&graph, &config)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;

    let mut sink = create(&args.out)?;
    write_assignment(
        &outcome.assignment,
        graph.user_tokens(),
        graph.item_tokens(),
        &mut sink,
    )?;
    sink.flush()?;

    let mut report = json!({
        "iterations": outcome.report.iterations_run,
        "k_user": outcome.assignment.k_user,
        "k_item": outcome.assignment.k_item,
        "objective": outcome.report.objective_value,
        "budget_met": outcome.report.budget_met,
        "wall_ms": wall_ms,
        "gini_user": outcome.gini_user(),
        "gini_item": outcome.gini_item(),
        "accl": outcome.accl(&graph),
        "budget": outcome.report.budget,
        "converged": outcome.report.converged_no_moves,
        "n_users": graph.n_users(),
        "n_items": graph.n_items(),
        "n_edges": graph.n_edges(),
    });
    if outcome.assignment.scu() {
        report["scu_overflow"] = json!(outcome.scu_overflow);
        report["scu_collapsed"] = json!(outcome.scu_collapsed);
    }
    if let Some(dim) = args.dim {
        let p = param_count(&outcome.assignment, dim);
        report["params"] = json!(p.reported_params);
        report["full_params"] = json!(p.full_params);
        report["param_ratio"] = json!(p.ratio);
    }
    print_json(&report)
}

/// Reorders a file's assignment into graph id order, matching by token.
fn align_to_graph(
    graph: &BipartiteGraph,
    file: cocluster::SketchFile,
) -> Result<SketchAssignment, Failure> {
    let mismatch = |what: &str| Failure {
        code: 3,
        message: format!("assignment {what} do not match the edge list"),
    };
    if file.user_tokens.len() != graph.n_users() || file.item_tokens.len() != graph.n_items() {
        return Err(mismatch("entity counts"));
    }
    let reorder = |tokens: &[String], file_tokens: &[String]| -> Option<Vec<usize>> {
        let pos: std::collections::HashMap<&str, usize> = file_tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect();
        tokens
            .iter()
            .map(|t| pos.get(t.as_str()).copied())
            .collect()
    };
    let users =
        reorder(graph.user_tokens(), &file.user_tokens).ok_or_else(|| mismatch("user tokens"))?;
    let items =
        reorder(graph.item_tokens(), &file.item_tokens).ok_or_else(|| mismatch("item tokens"))?;
    let a = file.assignment;
    Ok(SketchAssignment {
        user_primary: users.iter().map(|&p| a.user_primary[p]).collect(),
        user_secondary: a
            .user_secondary
            .as_ref()
            .map(|sec| users.iter().map(|&p| sec[p]).collect()),
        item_cluster: items.iter().map(|&p| a.item_cluster[p]).collect(),
        ..a
    })
}

fn cmd_metrics(args: MetricsArgs) -> Result<(), Failure> {
    let graph = load_graph(&args.edges)?;
    let file = read_assignment(open(&args.assignment)?).map_err(|e| Failure {
        code: 1,
        message: format!("{}: {e}", args.assignment.display()),
    })?;
    let assignment = align_to_graph(&graph, file)?;
    let gamma = args.gamma.unwrap_or(assignment.gamma);
    let scheme: WeightScheme = match args.scheme {
        Some(s) => s.into(),
        None => assignment.scheme.parse().unwrap_or(WeightScheme::Hws),
    };
    let weights = compute_weights(&graph, &scheme)?;
    let joint = assignment.aligned_labeling(&graph);
    let nu = graph.n_users();
    let hist = cluster_size_histogram(&joint);
    let sizes: Vec<usize> = hist.values().copied().collect();
    let report = json!({
        "k_user": assignment.k_user,
        "k_item": assignment.k_item,
        "gini_user": gini(&cluster_sizes(&joint, nu, SizeScope::Users))?,
        "gini_item": gini(&cluster_sizes(&joint, nu, SizeScope::Items))?,
        "gini_joint": gini(&sizes)?,
        "accl": accl(&graph, &joint),
        "cross_edges": cross_cluster_edges(&graph, &joint),
        "objective": objective_pairsum(&graph, &weights, &joint, gamma)?,
        "gamma": gamma,
        "scheme": scheme.name(),
        "histogram": {
            "clusters": sizes.len(),
            "min": sizes.iter().min(),
            "max": sizes.iter().max(),
            "mean": graph.n_nodes() as f64 / sizes.len() as f64,
            "singletons": sizes.iter().filter(|&&s| s == 1).count(),
        },
    });
    print_json(&report)
}

fn cmd_synth(args: SynthArgs) -> Result<(), Failure> {
    let (graph, truth) = match args.n_edges {
        Some(n_edges) => {
            let g = random_bipartite(
                args.n_users.unwrap_or_default(),
                args.n_items.unwrap_or_default(),
                n_edges,
                args.seed,
            )?;
            (g, None)
        }
        None => {
            let cfg = PlantedConfig {
                blocks: args.blocks,
                users_per_block: args.users_per_block,
                items_per_block: args.items_per_block,
                p_in: args.pu,
                p_out: args.po,
                seed: args.seed,
            };
            let (g, t) = planted_bipartite(&cfg)?;
            (g, Some(t))
        }
    };
    match &args.out {
        Some(path) => write_edge_list(&graph, create(path)?)?,
        None => write_edge_list(&graph, io::stdout().lock())?,
    }
    if let Some(path) = &args.truth {
        let truth = truth.ok_or_else(|| config_error("--truth applies only to planted graphs"))?;
        let mut sink = create(path)?;
        let nu = graph.n_users();
        for (node, block) in truth.iter().enumerate() {
            let (kind, token) = if node < nu {
                ("U", &graph.user_tokens()[node])
            } else {
                ("I", &graph.item_tokens()[node - nu])
            };
            writeln!(sink, "{kind}\t{token}\t{block}")?;
        }
        sink.flush()?;
    }
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<(), Failure> {
    let graph = load_graph(&args.edges)?;
    let weights = compute_weights(&graph, &args.scheme.into())?;
    let (best, score) = brute_force_optimum(&graph, &weights, args.gamma, args.max_nodes)?;
    let nu = graph.n_users();
    let users: serde_json::Map<String, Value> = graph
        .user_tokens()
        .iter()
        .zip(&best[..nu])
        .map(|(t, &l)| (t.clone(), json!(l)))
        .collect();
    let items: serde_json::Map<String, Value> = graph
        .item_tokens()
        .iter()
        .zip(&best[nu..])
        .map(|(t, &l)| (t.clone(), json!(l)))
        .collect();
    print_json(&json!({ "score": score, "users": users, "items": items }))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Cluster(a) => cmd_cluster(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Oracle(a) => cmd_oracle(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
