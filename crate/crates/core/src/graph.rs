//! Weighted undirected networks and terminal assignments.
//!
//! A [`Network`] is a simple undirected graph whose edges carry a length
//! `c`, a conductivity `D` and a signed flux `Q` (positive when flowing from
//! `u` to `v`). Vertex ids are dense `0..n`; the external names they came
//! from are kept alongside so files can be written back out unchanged.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Conductivity given to freshly built edges.
pub const DEFAULT_INIT_CONDUCTIVITY: f64 = 0.5;

/// Relative slack allowed when checking that inflow matches outflow.
const BALANCE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub usize);

impl VertexId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub usize);

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One tube of the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub length: f64,
    pub conductivity: f64,
    /// Signed flux, positive for flow `u -> v`.
    pub flux: f64,
}

impl Edge {
    /// Flux leaving `from` along this edge. Flow `v -> u` is the negation of
    /// flow `u -> v`.
    ///
    /// # Panics
    ///
    /// If `from` is not an endpoint.
    pub fn flow_from(&self, from: VertexId) -> f64 {
        if from == self.u {
            self.flux
        } else if from == self.v {
            -self.flux
        } else {
            panic!("vertex {from} is not an endpoint of edge {}-{}", self.u, self.v)
        }
    }

    pub fn other(&self, end: VertexId) -> VertexId {
        if end == self.u {
            self.v
        } else {
            self.u
        }
    }

    /// `D / c`, the hydraulic weight of the tube.
    pub fn weight(&self) -> f64 {
        self.conductivity / self.length
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    names: Vec<String>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<EdgeId>>,
}

impl Network {
    fn from_parts(names: Vec<String>, edges: Vec<Edge>) -> Result<Self> {
        let n = names.len();
        let mut adjacency = vec![Vec::new(); n];
        let mut seen = HashSet::with_capacity(edges.len());
        for (i, e) in edges.iter().enumerate() {
            let (un, vn) = (&names[e.u.0], &names[e.v.0]);
            if e.u == e.v {
                return Err(Error::SelfLoop(un.clone()));
            }
            if !(e.length > 0.0) || !e.length.is_finite() {
                return Err(Error::NonPositiveLength {
                    u: un.clone(),
                    v: vn.clone(),
                    length: e.length,
                });
            }
            let key = (e.u.min(e.v), e.u.max(e.v));
            if !seen.insert(key) {
                return Err(Error::DuplicateEdge { u: un.clone(), v: vn.clone() });
            }
            adjacency[e.u.0].push(EdgeId(i));
            adjacency[e.v.0].push(EdgeId(i));
        }
        Ok(Self { names, edges, adjacency })
    }

    /// Builds a network from named `(u, v, length)` triples. Vertices are
    /// numbered in order of first appearance.
    pub fn from_named_edges<S: AsRef<str>>(triples: &[(S, S, f64)]) -> Result<Self> {
        let mut ids: HashMap<String, VertexId> = HashMap::new();
        let mut names = Vec::new();
        let mut intern = |name: &str| {
            *ids.entry(name.to_owned()).or_insert_with(|| {
                names.push(name.to_owned());
                VertexId(names.len() - 1)
            })
        };
        let edges: Vec<Edge> = triples
            .iter()
            .map(|(u, v, length)| Edge {
                u: intern(u.as_ref()),
                v: intern(v.as_ref()),
                length: *length,
                conductivity: DEFAULT_INIT_CONDUCTIVITY,
                flux: 0.0,
            })
            .collect();
        if edges.is_empty() {
            return Err(Error::EmptyNetwork);
        }
        Self::from_parts(names, edges)
    }

    /// Keeps the vertex set of `self` but replaces the edges.
    pub(crate) fn with_edges(&self, edges: Vec<Edge>) -> Self {
        Self::from_parts(self.names.clone(), edges).expect("edges taken from a valid network")
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edges_mut(&mut self) -> &mut [Edge] {
        &mut self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.0]
    }

    /// Edges incident to `v`, in insertion order.
    pub fn incident(&self, v: VertexId) -> &[EdgeId] {
        &self.adjacency[v.0]
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.vertex_count()).map(VertexId)
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v.0 < self.vertex_count()
    }

    /// External name of a vertex.
    pub fn name(&self, v: VertexId) -> &str {
        &self.names[v.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn vertex_by_name(&self, name: &str) -> Option<VertexId> {
        self.names.iter().position(|n| n == name).map(VertexId)
    }

    pub fn find_edge(&self, a: VertexId, b: VertexId) -> Option<EdgeId> {
        self.adjacency
            .get(a.0)?
            .iter()
            .copied()
            .find(|&e| self.edges[e.0].other(a) == b)
    }

    /// `(u, v, length)` triples by external name, in edge order.
    pub fn triples(&self) -> Vec<(String, String, f64)> {
        self.edges
            .iter()
            .map(|e| (self.names[e.u.0].clone(), self.names[e.v.0].clone(), e.length))
            .collect()
    }

    pub fn set_conductivity(&mut self, d: f64) {
        for e in &mut self.edges {
            e.conductivity = d;
        }
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    /// Net flux leaving `v` through its incident edges.
    pub fn net_outflow(&self, v: VertexId) -> f64 {
        self.adjacency[v.0].iter().map(|&e| self.edges[e.0].flow_from(v)).sum()
    }

    /// Component label per vertex, counting only edges accepted by `keep`.
    pub(crate) fn components_by(&self, keep: impl Fn(&Edge) -> bool) -> Vec<usize> {
        let n = self.vertex_count();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        let mut queue = VecDeque::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            queue.push_back(start);
            while let Some(x) = queue.pop_front() {
                for &eid in &self.adjacency[x] {
                    let e = &self.edges[eid.0];
                    if !keep(e) {
                        continue;
                    }
                    let y = e.other(VertexId(x)).0;
                    if label[y] == usize::MAX {
                        label[y] = next;
                        queue.push_back(y);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// First vertex not reachable from vertex 0, if any.
    pub fn first_unreachable(&self) -> Option<VertexId> {
        let label = self.components_by(|_| true);
        label.iter().position(|&l| l != 0).map(VertexId)
    }
}

/// Builds a network from numeric `(u, v, length)` triples.
///
/// Ids that are not already dense `0..n` are densified in ascending order;
/// the original numbers become the vertex names.
pub fn build_network(edge_list: &[(usize, usize, f64)]) -> Result<Network> {
    let mut ids: Vec<usize> = edge_list.iter().flat_map(|&(u, v, _)| [u, v]).collect();
    ids.sort_unstable();
    ids.dedup();
    let dense: HashMap<usize, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let names = ids.iter().map(usize::to_string).collect();
    let edges: Vec<Edge> = edge_list
        .iter()
        .map(|&(u, v, length)| Edge {
            u: VertexId(dense[&u]),
            v: VertexId(dense[&v]),
            length,
            conductivity: DEFAULT_INIT_CONDUCTIVITY,
            flux: 0.0,
        })
        .collect();
    if edges.is_empty() {
        return Err(Error::EmptyNetwork);
    }
    Network::from_parts(names, edges)
}

/// Sources and sinks for one solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminalConfig {
    pub sources: Vec<(VertexId, f64)>,
    pub sinks: Vec<(VertexId, f64)>,
}

impl TerminalConfig {
    /// One source pushing `inflow` into one sink.
    pub fn single(source: VertexId, sink: VertexId, inflow: f64) -> Self {
        Self { sources: vec![(source, inflow)], sinks: vec![(sink, inflow)] }
    }

    pub fn total_inflow(&self) -> f64 {
        self.sources.iter().map(|&(_, a)| a).sum()
    }

    pub fn total_outflow(&self) -> f64 {
        self.sinks.iter().map(|&(_, a)| a).sum()
    }

    /// Net injection `b_i` per vertex: `+inflow` at sources, `-outflow` at sinks.
    pub fn injection(&self, n: usize) -> Vec<f64> {
        let mut b = vec![0.0; n];
        for &(v, a) in &self.sources {
            b[v.0] += a;
        }
        for &(v, a) in &self.sinks {
            b[v.0] -= a;
        }
        b
    }

    pub fn terminals(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.sources.iter().chain(&self.sinks).map(|&(v, _)| v)
    }
}

/// Checks that the network is connected and the terminals are present,
/// disjoint, positive and balanced.
pub fn validate(network: &Network, terminals: &TerminalConfig) -> Result<()> {
    if network.edge_count() == 0 {
        return Err(Error::EmptyNetwork);
    }
    for v in terminals.terminals() {
        if !network.contains(v) {
            return Err(Error::UnknownTerminal(v));
        }
    }
    if let Some(v) = network.first_unreachable() {
        return Err(Error::Disconnected(v));
    }
    if terminals.sources.is_empty() || terminals.sinks.is_empty() {
        return Err(Error::TooFewTerminals {
            needed: 2,
            got: terminals.sources.len() + terminals.sinks.len(),
        });
    }
    for &(v, amount) in terminals.sources.iter().chain(&terminals.sinks) {
        if !(amount > 0.0) || !amount.is_finite() {
            return Err(Error::NonPositiveAmount { vertex: v, amount });
        }
    }
    let sources: HashSet<VertexId> = terminals.sources.iter().map(|&(v, _)| v).collect();
    if let Some(&(v, _)) = terminals.sinks.iter().find(|(v, _)| sources.contains(v)) {
        return Err(Error::OverlappingTerminals(v));
    }
    let (inflow, outflow) = (terminals.total_inflow(), terminals.total_outflow());
    if (inflow - outflow).abs() > BALANCE_RTOL * inflow.max(outflow) {
        return Err(Error::UnbalancedFlow { inflow, outflow });
    }
    Ok(())
}
