//! Command-line front end. Machine output is JSON (CSV for experiments) with
//! exact `"p/q"` numbers; identical arguments give byte-identical output.
//!
//! Exit codes: 0 success, 1 a domain outcome reported as data (infeasible,
//! refused, verification failure), 2 bad input.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::agent::{traverse, BiasProfile};
use crate::chunked::{ChunkPlan, ChunkedGraph};
use crate::edge_chunk::optimal_edge_chunking;
use crate::graph::{make_n_fan, shortest_to_sink, EdgeId, FanSpec, TaskGraph};
use crate::graph_chunk::{chunk_graph_global, chunk_graph_local, BudgetMode, BudgetSpec};
use crate::io;
use crate::multi_agent::{chunk_same_path, chunk_split, m_agent_single_path_plan, two_agent_plan, AgentSet, Direction, MultiAgentError};
use crate::oracle::{chunks_closed_form, chunks_for_constant_ratio, cost_ratio_curve, rows_to_csv, run_suite, Suite, SuiteConfig};
use crate::rat::Rat;

#[derive(Parser, Debug)]
#[command(name = "chunkwise", version, about = "Chunk task graphs for present-biased agents")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write output here instead of stdout.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    /// Add `<field>_decimal` approximations next to exact numbers.
    #[arg(long, global = true)]
    pub decimal: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Walk the graph as a biased agent, optionally with a chunk plan.
    Simulate {
        #[arg(short, long)]
        graph: PathBuf,
        #[arg(short, long)]
        bias: Rat,
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Optimal k-chunking of one edge.
    ChunkEdge {
        #[arg(short, long)]
        graph: PathBuf,
        /// Edge as `from,to`.
        #[arg(short, long)]
        edge: String,
        #[arg(short, long)]
        bias: Rat,
        #[arg(short, long)]
        k: usize,
    },
    /// Plan chunkings for the whole graph.
    ChunkGraph(ChunkGraphArgs),
    /// Chunk one edge so one agent takes it and the other is repelled.
    SplitEdge {
        #[arg(short, long)]
        graph: PathBuf,
        #[arg(short, long)]
        edge: String,
        /// Two biases `b1,b2`.
        #[arg(long)]
        biases: String,
        #[arg(short, long)]
        k: usize,
        #[arg(long, value_enum, default_value_t = Taker::First)]
        taker: Taker,
    },
    /// Chunk one edge so that every agent takes it.
    SamePathEdge {
        #[arg(short, long)]
        graph: PathBuf,
        #[arg(short, long)]
        edge: String,
        #[arg(long)]
        biases: String,
        #[arg(short, long)]
        k: usize,
    },
    /// Generate an n-fan.
    Fan {
        #[arg(short, long)]
        n: usize,
        #[arg(short, long)]
        c: Rat,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Cross-check planners against brute force on seeded random instances.
    Verify {
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(short, long, default_value_t = 3)]
        k: usize,
        #[arg(short, long, default_value_t = 32)]
        d: u64,
        #[arg(long, default_value_t = 50)]
        instances: usize,
    },
    /// Parameter sweeps, as CSV.
    #[command(subcommand)]
    Experiment(Experiment),
}

#[derive(Args, Debug)]
pub struct ChunkGraphArgs {
    #[arg(short, long)]
    graph: PathBuf,
    /// Bias of a single agent.
    #[arg(short, long, conflicts_with = "biases")]
    bias: Option<Rat>,
    /// Comma-separated biases of several agents.
    #[arg(long)]
    biases: Option<String>,
    #[arg(long, value_enum, default_value_t = Mode::Local)]
    mode: Mode,
    #[arg(short, long)]
    k: usize,
    /// Route every agent along one shared path.
    #[arg(long)]
    single_path: bool,
}

#[derive(Subcommand, Debug)]
pub enum Experiment {
    /// Cost ratio of fans with every positive edge chunked.
    CostRatio {
        #[arg(short, long)]
        b: Rat,
        #[arg(short, long)]
        c: Rat,
        #[arg(long)]
        n_max: usize,
        #[arg(short, long)]
        k: usize,
    },
    /// Fewest chunks per edge that keep the fan's cost ratio at most `ratio`.
    ChunksNeeded {
        #[arg(short, long)]
        b: Rat,
        /// Target cost ratio.
        #[arg(short, long)]
        ratio: Rat,
        #[arg(long)]
        n_max: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Taker {
    First,
    Second,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Mode {
    Local,
    Global,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Format {
    Json,
    Dot,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SuiteArg {
    EdgeOracle,
    GraphOracle,
    SamePath,
    Split,
    TwoAgent,
    All,
}

enum Failure {
    /// Exit 2, message on stderr.
    Input(String),
    /// Exit 1, JSON document on stdout.
    Domain(Value),
}

type Outcome = Result<Output, Failure>;

enum Output {
    Json(Value),
    Text(String),
    /// Reported but exits 1.
    Violations(Value),
}

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Input(e.to_string())
}

fn domain(kind: &str, message: impl std::fmt::Display, data: Value) -> Failure {
    Failure::Domain(json!({ "error": kind, "message": message.to_string(), "data": data }))
}

fn read_graph(path: &Path) -> Result<TaskGraph, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    io::load_graph(&bytes).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn parse_edge(g: &TaskGraph, s: &str) -> Result<EdgeId, Failure> {
    let (from, to) = s
        .split_once(',')
        .ok_or_else(|| Failure::Input(format!("edge `{s}` must look like from,to")))?;
    g.edge_by_names(from.trim(), to.trim()).map_err(input)
}

fn parse_biases(s: &str) -> Result<Vec<Rat>, Failure> {
    s.split(',').map(|b| b.trim().parse::<Rat>().map_err(input)).collect()
}

fn profile(b: &Rat) -> Result<BiasProfile, Failure> {
    BiasProfile::new(b.clone()).map_err(input)
}

fn budget(mode: Mode, k: usize) -> BudgetSpec {
    match mode {
        Mode::Local => BudgetSpec::local(k),
        Mode::Global => BudgetSpec::global(k),
    }
}

fn multi_error(e: MultiAgentError) -> Failure {
    match e {
        MultiAgentError::InvalidParams(_) | MultiAgentError::Graph(_) | MultiAgentError::Agent(_) => input(e),
        MultiAgentError::TakerRefuses { .. } => domain("taker_refuses", &e, Value::Null),
        MultiAgentError::NoSharedPath => domain("no_shared_path", &e, Value::Null),
        MultiAgentError::PlanNotFollowed => domain("plan_not_followed", &e, Value::Null),
    }
}

fn simulate(graph: &Path, bias: &Rat, plan: Option<&Path>) -> Outcome {
    let g = read_graph(graph)?;
    let p = profile(bias)?;
    let chunks = match plan {
        Some(path) => {
            let bytes = fs::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            io::load_plan(&g, &bytes).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?
        }
        None => ChunkPlan::new(),
    };
    let cg = ChunkedGraph::new(&g, &chunks);
    let trace = traverse(&cg, &p).map_err(input)?;
    Ok(Output::Json(json!({
        "bias": bias,
        "cost": trace.total,
        "path": io::trace_json(&trace, &cg)["path"],
        "trace": io::trace_json(&trace, &cg),
    })))
}

fn chunk_edge(graph: &Path, edge: &str, bias: &Rat, k: usize) -> Outcome {
    let g = read_graph(graph)?;
    let e = parse_edge(&g, edge)?;
    let dist = shortest_to_sink(&g).map_err(input)?;
    let (c, report) = optimal_edge_chunking(&g, &dist, e, bias, k).map_err(input)?;
    Ok(Output::Json(io::report_json(&g, &c, &report)))
}

fn chunk_graph(a: &ChunkGraphArgs) -> Outcome {
    let g = read_graph(&a.graph)?;
    let spec = budget(a.mode, a.k);
    let biases = match (&a.bias, &a.biases) {
        (Some(b), None) => vec![b.clone()],
        (None, Some(list)) => parse_biases(list)?,
        _ => return Err(Failure::Input("give either --bias or --biases".into())),
    };
    if a.single_path {
        let agents = AgentSet::new(biases.clone()).map_err(multi_error)?;
        let p = m_agent_single_path_plan(&g, &agents, spec).map_err(multi_error)?;
        return Ok(Output::Json(io::shared_path_plan_json(&g, &biases, &p)));
    }
    match biases.as_slice() {
        [b] => {
            let p = match spec.mode {
                BudgetMode::Local => chunk_graph_local(&g, b, a.k),
                BudgetMode::Global => chunk_graph_global(&g, b, a.k),
            };
            match p {
                Ok(p) => Ok(Output::Json(io::graph_plan_json(&g, &p))),
                Err(crate::graph_chunk::GraphChunkError::PlanNotFollowed) => {
                    Err(domain("plan_not_followed", "the planned path is not followed", Value::Null))
                }
                Err(e) => Err(input(e)),
            }
        }
        [b1, b2] => {
            let p = two_agent_plan(&g, b1, b2, spec).map_err(multi_error)?;
            Ok(Output::Json(io::two_agent_plan_json(&g, [b1, b2], &p)))
        }
        _ => Err(Failure::Input(
            "divergent paths are planned for one or two agents; use --single-path for more".into(),
        )),
    }
}

fn two_biases(s: &str) -> Result<(Rat, Rat), Failure> {
    match parse_biases(s)?.as_slice() {
        [a, b] => Ok((a.clone(), b.clone())),
        _ => Err(Failure::Input("--biases needs exactly two values".into())),
    }
}

fn split_edge(graph: &Path, edge: &str, biases: &str, k: usize, taker: Taker) -> Outcome {
    let g = read_graph(graph)?;
    let e = parse_edge(&g, edge)?;
    let (b1, b2) = two_biases(biases)?;
    let dist = shortest_to_sink(&g).map_err(input)?;
    let direction = match taker {
        Taker::First => Direction::First,
        Taker::Second => Direction::Second,
    };
    let res = chunk_split(&g, &dist, e, &b1, &b2, k, direction).map_err(multi_error)?;
    Ok(Output::Json(io::split_json(&g, &res)))
}

fn same_path_edge(graph: &Path, edge: &str, biases: &str, k: usize) -> Outcome {
    let g = read_graph(graph)?;
    let e = parse_edge(&g, edge)?;
    let agents = AgentSet::new(parse_biases(biases)?).map_err(multi_error)?;
    let dist = shortest_to_sink(&g).map_err(input)?;
    match chunk_same_path(&g, &dist, e, &agents, k).map_err(multi_error)? {
        Ok(c) => Ok(Output::Json(io::chunking_json(&g, &c))),
        Err(why) => Err(domain("infeasible", "no chunking is taken by every agent", json!(why))),
    }
}

fn fan(n: usize, c: &Rat, format: Format) -> Outcome {
    let g = make_n_fan(&FanSpec { n, c: c.clone() }).map_err(input)?;
    Ok(match format {
        Format::Json => Output::Text(String::from_utf8(io::save_graph(&g)).expect("utf-8")),
        Format::Dot => Output::Text(g.to_dot()),
    })
}

fn verify(suite: SuiteArg, cfg: SuiteConfig) -> Outcome {
    let suites: Vec<Suite> = match suite {
        SuiteArg::EdgeOracle => vec![Suite::EdgeOracle],
        SuiteArg::GraphOracle => vec![Suite::GraphOracle],
        SuiteArg::SamePath => vec![Suite::SamePath],
        SuiteArg::Split => vec![Suite::Split],
        SuiteArg::TwoAgent => vec![Suite::TwoAgent],
        SuiteArg::All => Suite::ALL.to_vec(),
    };
    let mut reports = Vec::new();
    for s in suites {
        reports.push(run_suite(s, cfg).map_err(input)?);
    }
    let clean = reports.iter().all(|r| r.violations.is_empty());
    let doc = json!({ "seed": cfg.seed, "k": cfg.k, "d": cfg.d, "passed": clean, "suites": reports });
    Ok(if clean { Output::Json(doc) } else { Output::Violations(doc) })
}

fn experiment(e: &Experiment) -> Outcome {
    match e {
        Experiment::CostRatio { b, c, n_max, k } => {
            let rows = cost_ratio_curve(b, c, 1..=*n_max, *k).map_err(input)?;
            Ok(Output::Text(rows_to_csv(&rows)))
        }
        Experiment::ChunksNeeded { b, ratio, n_max } => {
            let mut out = String::from("n,k,closed_form\n");
            let bf = b.to_f64();
            let rf = ratio.to_f64();
            for n in 1..=*n_max {
                let k = chunks_for_constant_ratio(b, ratio, n).map_err(input)?;
                out.push_str(&format!("{n},{k},{:.6}\n", chunks_closed_form(bf, rf, n)));
            }
            Ok(Output::Text(out))
        }
    }
}

fn dispatch(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Simulate { graph, bias, plan } => simulate(graph, bias, plan.as_deref()),
        Command::ChunkEdge { graph, edge, bias, k } => chunk_edge(graph, edge, bias, *k),
        Command::ChunkGraph(a) => chunk_graph(a),
        Command::SplitEdge { graph, edge, biases, k, taker } => split_edge(graph, edge, biases, *k, *taker),
        Command::SamePathEdge { graph, edge, biases, k } => same_path_edge(graph, edge, biases, *k),
        Command::Fan { n, c, format } => fan(*n, c, *format),
        Command::Verify { suite, seed, k, d, instances } => verify(
            *suite,
            SuiteConfig { seed: *seed, k: *k, d: *d, instances: *instances },
        ),
        Command::Experiment(e) => experiment(e),
    }
}

fn emit(cli: &Cli, text: &str, stdout: &mut dyn Write) -> Result<(), String> {
    match &cli.output {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

/// Runs one command; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    let json_text = |mut v: Value| {
        if cli.decimal {
            io::with_decimals(&mut v, 6);
        }
        io::render(&v)
    };
    let (text, code) = match dispatch(&cli) {
        Ok(Output::Json(v)) => (json_text(v), 0),
        Ok(Output::Text(t)) => (t, 0),
        Ok(Output::Violations(v)) => (json_text(v), 1),
        Err(Failure::Domain(v)) => (json_text(v), 1),
        Err(Failure::Input(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            return 2;
        }
    };
    match emit(&cli, &text, stdout) {
        Ok(()) => code,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
    }
}
