//! Text formats shared by the command line and the tests.
//!
//! * Edge lists: one `u v length` per line, `#` starts a comment.
//! * Mazes: rectangular rows of `#` (wall), `.` (corridor), `S`, `T`.
//! * City files: `x y` per line, or an `n x n` distance matrix.
//! * Parameter files: `key = value` lines; competition configs add
//!   repeated `food = q r mass [quality]` and
//!   `agent = q r [power [genotype [mass [hunger]]]]` lines.
//! * Solver traces: CSV with header `iteration,edge,conductivity,flux`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::compete::{AgentSeed, FoodSource, SimConfig};
use crate::error::{Error, Result};
use crate::graph::{Network, TerminalConfig, VertexId};
use crate::hex::AxialCoord;

/// Header row of the solver CSV trace.
pub const TRACE_HEADER: &str = "iteration,edge,conductivity,flux";

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Content lines with their 1-based numbers, comments and blanks removed.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

fn number(line: usize, token: &str) -> Result<f64> {
    token
        .parse::<f64>()
        .map_err(|_| parse_err(line, format!("`{token}` is not a number")))
}

/// Parses an edge list. Vertex names keep their spelling and are numbered
/// in order of first appearance.
pub fn parse_edgelist(text: &str) -> Result<Network> {
    let mut triples = Vec::new();
    let mut lines = Vec::new();
    for (line, content) in content_lines(text) {
        let fields: Vec<&str> = content.split_whitespace().collect();
        let [u, v, len] = fields[..] else {
            return Err(parse_err(line, format!("expected `u v length`, got {} fields", fields.len())));
        };
        let length = number(line, len)?;
        if !(length > 0.0) || !length.is_finite() {
            return Err(parse_err(line, format!("edge {u}-{v} has non-positive length {len}")));
        }
        if u == v {
            return Err(parse_err(line, format!("self loop at {u}")));
        }
        triples.push((u.to_owned(), v.to_owned(), length));
        lines.push(line);
    }
    Network::from_named_edges(&triples).map_err(|e| match e {
        Error::DuplicateEdge { ref u, ref v } => {
            let at = triples
                .iter()
                .enumerate()
                .filter(|(_, t)| (&t.0 == u && &t.1 == v) || (&t.0 == v && &t.1 == u))
                .nth(1)
                .map_or(0, |(k, _)| lines[k]);
            parse_err(at, e.to_string())
        }
        other => other,
    })
}

/// Writes `u v length` lines; lengths use the shortest exact decimal form.
pub fn serialize_edgelist(network: &Network) -> String {
    let mut out = String::new();
    for (u, v, len) in network.triples() {
        let _ = writeln!(out, "{u} {v} {len}");
    }
    out
}

/// A maze turned into a corridor graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Maze {
    pub network: Network,
    pub terminals: TerminalConfig,
    /// `(row, column)` of each vertex.
    pub cells: Vec<(usize, usize)>,
}

/// Corridor cells reachable from `S` become vertices named `row,col`, with
/// unit edges between 4-neighbours. Corridor pockets cut off from `S` are
/// left out.
pub fn parse_maze(text: &str, inflow: f64) -> Result<Maze> {
    let mut rows: Vec<&[u8]> = text.lines().map(|l| l.trim_end_matches('\r').as_bytes()).collect();
    while rows.last().is_some_and(|r| r.is_empty()) {
        rows.pop();
    }
    let width = rows.first().map_or(0, |r| r.len());
    let mut source = None;
    let mut sink = None;
    for (r, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(Error::RaggedRows { row: r + 1, width: row.len(), expected: width });
        }
        for (c, &ch) in row.iter().enumerate() {
            match ch {
                b'#' | b'.' => {}
                b'S' if source.replace((r, c)).is_some() => return Err(Error::MultipleSources('S')),
                b'T' if sink.replace((r, c)).is_some() => return Err(Error::MultipleSources('T')),
                b'S' | b'T' => {}
                other => {
                    return Err(parse_err(r + 1, format!("unexpected character `{}`", other as char)));
                }
            }
        }
    }
    let source = source.ok_or(Error::MissingTerminal('S'))?;
    let sink = sink.ok_or(Error::MissingTerminal('T'))?;

    let open = |r: usize, c: usize| rows[r][c] != b'#';
    let mut reached = BTreeSet::from([source]);
    let mut cells = vec![source];
    let mut queue = VecDeque::from([source]);
    while let Some((r, c)) = queue.pop_front() {
        let mut step = |nr: usize, nc: usize| {
            if !open(nr, nc) {
                return;
            }
            if reached.insert((nr, nc)) {
                cells.push((nr, nc));
                queue.push_back((nr, nc));
            }
        };
        if r > 0 {
            step(r - 1, c);
        }
        if c > 0 {
            step(r, c - 1);
        }
        if r + 1 < rows.len() {
            step(r + 1, c);
        }
        if c + 1 < width {
            step(r, c + 1);
        }
    }
    if !reached.contains(&sink) {
        return Err(Error::NoPath);
    }
    let name = |(r, c): (usize, usize)| format!("{r},{c}");
    let mut triples = Vec::new();
    // Right and down neighbours only, so each corridor link appears once.
    for &(r, c) in &cells {
        for (nr, nc) in [(r, c + 1), (r + 1, c)] {
            if reached.contains(&(nr, nc)) {
                triples.push((name((r, c)), name((nr, nc)), 1.0));
            }
        }
    }
    let network = Network::from_named_edges(&triples)?;
    // `from_named_edges` numbers by first appearance; map back to cells.
    let cells: Vec<(usize, usize)> = network
        .names()
        .iter()
        .map(|n| {
            let (r, c) = n.split_once(',').expect("maze vertex names are `row,col`");
            (r.parse().expect("row"), c.parse().expect("col"))
        })
        .collect();
    let find = |cell| VertexId(cells.iter().position(|&x| x == cell).expect("terminal is a vertex"));
    let terminals = TerminalConfig::single(find(source), find(sink), inflow);
    Ok(Maze { network, terminals, cells })
}

/// City coordinates or a full distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum CityFile {
    Coords(Vec<(f64, f64)>),
    Matrix(Vec<Vec<f64>>),
}

/// Lines of two numbers are coordinates; `k` lines of `k` numbers are a
/// distance matrix.
pub fn parse_cities(text: &str) -> Result<CityFile> {
    let mut rows = Vec::new();
    for (line, content) in content_lines(text) {
        let row = content
            .split_whitespace()
            .map(|t| number(line, t))
            .collect::<Result<Vec<f64>>>()?;
        rows.push((line, row));
    }
    let k = rows.len();
    if rows.iter().all(|(_, r)| r.len() == 2) {
        return Ok(CityFile::Coords(rows.into_iter().map(|(_, r)| (r[0], r[1])).collect()));
    }
    if let Some((line, r)) = rows.iter().find(|(_, r)| r.len() != k) {
        return Err(parse_err(*line, format!("expected 2 or {k} numbers, got {}", r.len())));
    }
    Ok(CityFile::Matrix(rows.into_iter().map(|(_, r)| r).collect()))
}

/// Turns a raw override value into JSON: numbers and booleans as such,
/// anything else as a string.
fn json_value(raw: &str) -> Value {
    serde_json::from_str::<Value>(raw)
        .ok()
        .filter(|v| v.is_number() || v.is_boolean())
        .unwrap_or_else(|| Value::String(raw.to_owned()))
}

/// Sets one field of a serde struct by name, keeping the others.
pub fn apply_override<T: Serialize + DeserializeOwned>(target: &mut T, key: &str, raw: &str) -> Result<()> {
    let mut value = serde_json::to_value(&*target).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let Some(obj) = value.as_object_mut() else {
        return Err(Error::InvalidConfig("parameters are not a record".into()));
    };
    match obj.get(key) {
        Some(Value::Array(_) | Value::Object(_)) | None => {
            return Err(Error::InvalidConfig(format!("unknown parameter `{key}`")));
        }
        Some(_) => {}
    }
    obj.insert(key.to_owned(), json_value(raw));
    *target = serde_json::from_value(value).map_err(|e| Error::InvalidConfig(format!("{key} = {raw}: {e}")))?;
    Ok(())
}

/// Reads `key = value` lines in file order.
pub fn parse_assignments(text: &str) -> Result<Vec<(usize, String, String)>> {
    content_lines(text)
        .map(|(line, content)| {
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| parse_err(line, "expected `key = value`"))?;
            Ok((line, key.trim().to_owned(), value.trim().to_owned()))
        })
        .collect()
}

/// Parses `key = value` lines into a parameter struct, starting from its
/// defaults.
pub fn parse_params<T: Serialize + DeserializeOwned + Default>(text: &str) -> Result<T> {
    let mut params = T::default();
    for (line, key, value) in parse_assignments(text)? {
        apply_override(&mut params, &key, &value).map_err(|e| parse_err(line, e.to_string()))?;
    }
    Ok(params)
}

fn int(line: usize, token: &str) -> Result<i32> {
    token
        .parse()
        .map_err(|_| parse_err(line, format!("`{token}` is not an integer")))
}

fn parse_food(line: usize, value: &str) -> Result<FoodSource> {
    let t: Vec<&str> = value.split_whitespace().collect();
    if !(3..=4).contains(&t.len()) {
        return Err(parse_err(line, "expected `food = q r mass [quality]`"));
    }
    Ok(FoodSource {
        position: AxialCoord::new(int(line, t[0])?, int(line, t[1])?),
        mass: number(line, t[2])?,
        quality: t.get(3).map_or(Ok(1.0), |q| number(line, q))?,
    })
}

fn parse_agent(line: usize, value: &str) -> Result<AgentSeed> {
    let t: Vec<&str> = value.split_whitespace().collect();
    if !(2..=6).contains(&t.len()) {
        return Err(parse_err(line, "expected `agent = q r [power [genotype [mass [hunger]]]]`"));
    }
    let mut seed = AgentSeed::at(AxialCoord::new(int(line, t[0])?, int(line, t[1])?));
    if let Some(p) = t.get(2) {
        seed.power = number(line, p)?;
    }
    if let Some(g) = t.get(3) {
        seed.genotype = g
            .parse()
            .map_err(|_| parse_err(line, format!("`{g}` is not a genotype")))?;
    }
    if let Some(m) = t.get(4) {
        seed.mass = number(line, m)?;
    }
    if let Some(h) = t.get(5) {
        seed.hunger = number(line, h)?;
    }
    Ok(seed)
}

/// Parses a competition config. Foods and agents are listed in file order,
/// which fixes their ids.
pub fn parse_sim_config(text: &str) -> Result<SimConfig> {
    let mut config = SimConfig::default();
    for (line, key, value) in parse_assignments(text)? {
        match key.as_str() {
            "food" => config.foods.push(parse_food(line, &value)?),
            "agent" => config.agents.push(parse_agent(line, &value)?),
            _ => apply_override(&mut config, &key, &value).map_err(|e| parse_err(line, e.to_string()))?,
        }
    }
    Ok(config)
}

/// Writes a competition config back in the format [`parse_sim_config`] reads.
pub fn serialize_sim_config(config: &SimConfig) -> String {
    let mut out = String::new();
    if let Ok(Value::Object(fields)) = serde_json::to_value(config) {
        for (key, value) in fields {
            if !value.is_array() {
                let _ = writeln!(out, "{key} = {}", value.as_str().map_or(value.to_string(), str::to_owned));
            }
        }
    }
    for f in &config.foods {
        let _ = writeln!(out, "food = {} {} {} {}", f.position.q, f.position.r, f.mass, f.quality);
    }
    for a in &config.agents {
        let _ = writeln!(
            out,
            "agent = {} {} {} {} {} {}",
            a.position.q, a.position.r, a.power, a.genotype, a.mass, a.hunger
        );
    }
    out
}

/// Appends one iteration of the solver trace.
pub fn write_trace_rows(out: &mut String, iteration: usize, network: &Network) {
    for (id, e) in network.edges().iter().enumerate() {
        let _ = writeln!(out, "{iteration},{id},{},{}", e.conductivity, e.flux);
    }
}

/// Everything needed to repeat a command-line run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub engine: String,
    pub input: Option<String>,
    pub overrides: Vec<(String, String)>,
    pub seed: u64,
    pub output: Option<String>,
    /// Parameters after defaults, file contents and overrides are applied.
    pub params: Value,
}
