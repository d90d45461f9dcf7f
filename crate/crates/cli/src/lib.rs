//! Command-line front end: `solve-path`, `steiner`, `compete` and `tsp`.
//!
//! Exit status is 0 on success, 1 when an engine or input file rejects the
//! run, and 2 for command-line usage errors.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use physarum::aco::{solve_tsp_with, AcoParams, TspInstance};
use physarum::adaptation::{run_solver_observed, SolverParams, SolverResult};
use physarum::compete::{run, SimConfig};
use physarum::graph::{Network, TerminalConfig, VertexId};
use physarum::io::{
    apply_override, parse_assignments, parse_cities, parse_edgelist, parse_maze, parse_sim_config, write_trace_rows,
    CityFile, RunManifest, TRACE_HEADER,
};
use physarum::strategies::{steiner_approx_observed, FlowSplit, StrategyMode};

#[derive(Debug, Parser)]
#[command(name = "physarum", version, about = "Physarum-inspired network solvers and simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Seed for every random choice in the run.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for summary.json, manifest.json and traces. Without it the
    /// summary goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a per-iteration trace into the output directory.
    #[arg(long, requires = "out")]
    trace: bool,
    /// Parameter file of `key = value` lines.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Override one parameter; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = key_value)]
    overrides: Vec<(String, String)>,
}

fn key_value(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("`{s}` is not KEY=VALUE"))?;
    Ok((k.trim().to_owned(), v.trim().to_owned()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Siso,
    Miso,
    Simo,
    Mimo,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Shortest path by flow adaptation, on a maze or an edge list.
    SolvePath {
        /// Maze of `#`, `.`, `S` and `T`.
        #[arg(long, required_unless_present = "graph", conflicts_with = "graph")]
        maze: Option<PathBuf>,
        /// Edge list of `u v length` lines.
        #[arg(long, requires_all = ["source", "sink"])]
        graph: Option<PathBuf>,
        #[arg(long)]
        source: Option<String>,
        #[arg(long)]
        sink: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Steiner-tree approximation over three or more terminals.
    Steiner {
        #[arg(long)]
        graph: PathBuf,
        /// Comma-separated vertex names. For `miso` the last one is the
        /// sink; for `simo` the first one is the source.
        #[arg(long, value_delimiter = ',', required = true)]
        terminals: Vec<String>,
        #[arg(long, value_enum, default_value = "mimo")]
        mode: Mode,
        #[command(flatten)]
        common: Common,
    },
    /// Competition of plasmodia on the hexagonal lattice.
    Compete {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Travelling salesman by ant colony with the Physarum pheromone blend.
    Tsp {
        /// `x y` lines or an `n x n` distance matrix.
        #[arg(long)]
        cities: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

/// A run that started but could not finish.
#[derive(Debug)]
struct Failure(String);

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<physarum::Error> for Failure {
    fn from(e: physarum::Error) -> Self {
        Failure(e.to_string())
    }
}

type Outcome<T> = Result<T, Failure>;

fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Outcome<()> {
    fs::write(path, contents).map_err(|e| Failure(format!("cannot write {}: {e}", path.display())))
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("summaries serialize");
    s.push('\n');
    s
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit status.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(Failure(msg)) => {
            eprintln!("error: {}", msg.replace('\n', " "));
            1
        }
    }
}

/// Files produced by one run.
struct Output {
    summary: String,
    trace: Option<(&'static str, String)>,
    manifest: RunManifest,
}

fn execute(command: Command) -> Outcome<()> {
    let (common, output) = match command {
        Command::SolvePath { maze, graph, source, sink, common } => {
            let out = solve_path(maze, graph, source, sink, &common)?;
            (common, out)
        }
        Command::Steiner { graph, terminals, mode, common } => {
            let out = steiner(&graph, &terminals, mode, &common)?;
            (common, out)
        }
        Command::Compete { config, common } => {
            let out = compete(&config, &common)?;
            (common, out)
        }
        Command::Tsp { cities, common } => {
            let out = tsp(&cities, &common)?;
            (common, out)
        }
    };
    let Some(dir) = &common.out else {
        print!("{}", output.summary);
        return Ok(());
    };
    fs::create_dir_all(dir).map_err(|e| Failure(format!("cannot create {}: {e}", dir.display())))?;
    write(&dir.join("summary.json"), &output.summary)?;
    write(&dir.join("manifest.json"), &json(&output.manifest))?;
    if let Some((name, body)) = output.trace.filter(|_| common.trace) {
        write(&dir.join(name), &body)?;
    }
    Ok(())
}

fn manifest(engine: &str, input: &Path, common: &Common, seed: u64, params: Value) -> RunManifest {
    RunManifest {
        engine: engine.to_owned(),
        input: Some(input.display().to_string()),
        overrides: common.overrides.clone(),
        seed,
        output: common.out.as_ref().map(|p| p.display().to_string()),
        params,
    }
}

/// Parameter-file assignments followed by `--set` overrides.
fn assignments(common: &Common) -> Outcome<Vec<(String, String)>> {
    let mut all = match &common.params {
        Some(path) => parse_assignments(&read(path)?)?
            .into_iter()
            .map(|(_, k, v)| (k, v))
            .collect(),
        None => Vec::new(),
    };
    all.extend(common.overrides.iter().cloned());
    Ok(all)
}

fn solver_params(common: &Common) -> Outcome<SolverParams> {
    let mut params = SolverParams::default();
    for (k, v) in assignments(common)? {
        apply_override(&mut params, &k, &v)?;
    }
    params.validate()?;
    Ok(params)
}

#[derive(Serialize)]
struct EdgeOut {
    u: String,
    v: String,
    length: f64,
    conductivity: f64,
}

fn surviving_edges(result: &SolverResult) -> Vec<EdgeOut> {
    let net = &result.final_network;
    result
        .surviving
        .iter()
        .map(|&id| {
            let e = net.edge(id);
            EdgeOut {
                u: net.name(e.u).to_owned(),
                v: net.name(e.v).to_owned(),
                length: e.length,
                conductivity: e.conductivity,
            }
        })
        .collect()
}

/// Vertex names from `from` to `to` if the survivors form a simple path.
fn walk_path(result: &SolverResult, from: VertexId, to: VertexId) -> Option<Vec<String>> {
    let net = &result.final_network;
    let mut degree = vec![0usize; net.vertex_count()];
    for &id in &result.surviving {
        let e = net.edge(id);
        degree[e.u.0] += 1;
        degree[e.v.0] += 1;
    }
    let mut path = vec![from];
    let mut prev = None;
    let mut here = from;
    while here != to {
        let next = result
            .surviving
            .iter()
            .map(|&id| net.edge(id))
            .filter(|e| e.u == here || e.v == here)
            .map(|e| e.other(here))
            .find(|&n| Some(n) != prev)?;
        prev = Some(here);
        here = next;
        path.push(here);
        if path.len() > net.vertex_count() {
            return None;
        }
    }
    let simple = path.len() == result.surviving.len() + 1
        && degree[from.0] == 1
        && degree[to.0] == 1;
    simple.then(|| path.iter().map(|&v| net.name(v).to_owned()).collect())
}

fn trace_observer(enabled: bool, buf: &mut String) -> impl FnMut(usize, &Network) + '_ {
    if enabled {
        buf.push_str(TRACE_HEADER);
        buf.push('\n');
    }
    move |it, net| {
        if enabled {
            write_trace_rows(buf, it, net);
        }
    }
}

#[derive(Serialize)]
struct PathSummary {
    engine: &'static str,
    converged: bool,
    iterations: usize,
    source: String,
    sink: String,
    surviving_length: f64,
    /// Vertex names along the surviving path, when it is one.
    path: Option<Vec<String>>,
    surviving_edges: Vec<EdgeOut>,
}

fn vertex(net: &Network, name: &str) -> Outcome<VertexId> {
    net.vertex_by_name(name)
        .ok_or_else(|| Failure(format!("no vertex named `{name}`")))
}

fn solve_path(
    maze: Option<PathBuf>,
    graph: Option<PathBuf>,
    source: Option<String>,
    sink: Option<String>,
    common: &Common,
) -> Outcome<Output> {
    let params = solver_params(common)?;
    let (input, network, terminals) = match (maze, graph) {
        (Some(path), _) => {
            let m = parse_maze(&read(&path)?, params.inflow)?;
            (path, m.network, m.terminals)
        }
        (None, Some(path)) => {
            let net = parse_edgelist(&read(&path)?)?;
            let s = vertex(&net, source.as_deref().expect("clap requires --source"))?;
            let t = vertex(&net, sink.as_deref().expect("clap requires --sink"))?;
            (path, net, TerminalConfig::single(s, t, params.inflow))
        }
        (None, None) => unreachable!("clap requires --maze or --graph"),
    };
    let mut trace = String::new();
    let result = run_solver_observed(&network, &terminals, &params, &mut trace_observer(common.trace, &mut trace))?;
    let (s, t) = (terminals.sources[0].0, terminals.sinks[0].0);
    let summary = PathSummary {
        engine: "path",
        converged: result.converged,
        iterations: result.iterations,
        source: network.name(s).to_owned(),
        sink: network.name(t).to_owned(),
        surviving_length: result.surviving_length(),
        path: walk_path(&result, s, t),
        surviving_edges: surviving_edges(&result),
    };
    let params_json = serde_json::to_value(&params).expect("params serialize");
    Ok(Output {
        summary: json(&summary),
        trace: Some(("trace.csv", trace)),
        manifest: manifest("path", &input, common, common.seed.unwrap_or(0), params_json),
    })
}

#[derive(Serialize)]
struct SteinerSummary {
    engine: &'static str,
    mode: &'static str,
    terminals: Vec<String>,
    converged: bool,
    iterations: usize,
    surviving_length: f64,
    surviving_edges: Vec<EdgeOut>,
}

fn steiner(graph: &Path, names: &[String], mode: Mode, common: &Common) -> Outcome<Output> {
    let params = solver_params(common)?;
    let network = parse_edgelist(&read(graph)?)?;
    let ids = names.iter().map(|n| vertex(&network, n)).collect::<Outcome<Vec<_>>>()?;
    let seed = common.seed.unwrap_or(0);
    let strategy = match mode {
        Mode::Siso if ids.len() == 2 => StrategyMode::Siso { source: ids[0], sink: ids[1] },
        Mode::Siso => {
            return Err(Failure(format!("siso takes exactly 2 terminals, got {}", ids.len())));
        }
        Mode::Miso => {
            let (sink, sources) = ids.split_last().ok_or_else(|| Failure("no terminals".into()))?;
            StrategyMode::Miso { sources: sources.to_vec(), sink: *sink, split: FlowSplit::Equal }
        }
        Mode::Simo => {
            let (source, sinks) = ids.split_first().ok_or_else(|| Failure("no terminals".into()))?;
            StrategyMode::Simo { source: *source, sinks: sinks.to_vec(), split: FlowSplit::Equal }
        }
        Mode::Mimo => StrategyMode::Mimo { terminals: ids.clone(), seed },
    };
    let mut trace = String::new();
    let result = steiner_approx_observed(&network, &strategy, &params, &mut trace_observer(common.trace, &mut trace))?;
    let summary = SteinerSummary {
        engine: "steiner",
        mode: strategy.name(),
        terminals: names.to_vec(),
        converged: result.converged,
        iterations: result.iterations,
        surviving_length: result.surviving_length(),
        surviving_edges: surviving_edges(&result),
    };
    let mut params_json = serde_json::to_value(&params).expect("params serialize");
    params_json["mode"] = Value::from(strategy.name());
    params_json["terminals"] = Value::from(names.to_vec());
    Ok(Output {
        summary: json(&summary),
        trace: Some(("trace.csv", trace)),
        manifest: manifest("steiner", graph, common, seed, params_json),
    })
}

fn compete(path: &Path, common: &Common) -> Outcome<Output> {
    let mut config: SimConfig = parse_sim_config(&read(path)?)?;
    for (k, v) in assignments(common)? {
        apply_override(&mut config, &k, &v)?;
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let result = run(&config)?;
    Ok(Output {
        summary: json(&result.summary),
        trace: Some(("trace.jsonl", result.trace_jsonl())),
        manifest: manifest(
            "compete",
            path,
            common,
            config.seed,
            serde_json::to_value(&config).expect("config serializes"),
        ),
    })
}

#[derive(Serialize)]
struct TspSummary {
    engine: &'static str,
    cities: usize,
    best_length: f64,
    best_tour: Vec<usize>,
    convergence_iteration: usize,
    epsilon: f64,
}

#[derive(Serialize)]
struct TspTraceRow<'a> {
    iteration: usize,
    best_length: f64,
    iteration_best_length: f64,
    iteration_best_tour: &'a [usize],
}

/// Keys starting with `field.` go to the adaptation parameters of the
/// conductivity field; the rest to the colony.
fn tsp(path: &Path, common: &Common) -> Outcome<Output> {
    let instance = match parse_cities(&read(path)?)? {
        CityFile::Coords(c) => TspInstance::from_coords(&c)?,
        CityFile::Matrix(m) => TspInstance::from_matrix(&m)?,
    };
    let mut aco = AcoParams::default();
    let mut field = SolverParams::default();
    for (k, v) in assignments(common)? {
        match k.strip_prefix("field.") {
            Some(rest) => apply_override(&mut field, rest, &v)?,
            None => apply_override(&mut aco, &k, &v)?,
        }
    }
    if let Some(seed) = common.seed {
        aco.seed = seed;
    }
    let result = solve_tsp_with(&instance, &aco, &field)?;
    let summary = TspSummary {
        engine: "tsp",
        cities: instance.len(),
        best_length: result.best_length,
        best_tour: result.best_tour.clone(),
        convergence_iteration: result.convergence_iteration,
        epsilon: aco.epsilon,
    };
    let mut trace = String::new();
    for (it, (best, round)) in result.best_per_iteration.iter().zip(&result.iteration_best).enumerate() {
        let row = TspTraceRow {
            iteration: it,
            best_length: *best,
            iteration_best_length: round.length,
            iteration_best_tour: &round.cities,
        };
        trace.push_str(&serde_json::to_string(&row).expect("rows serialize"));
        trace.push('\n');
    }
    let params = serde_json::json!({ "colony": aco, "field": field });
    Ok(Output {
        summary: json(&summary),
        trace: Some(("trace.jsonl", trace)),
        manifest: manifest("tsp", path, common, aco.seed, params),
    })
}
