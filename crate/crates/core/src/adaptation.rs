//! The adaptation loop: flow solves alternating with conductivity feedback.
//!
//! Each iteration solves the pressure system for the current conductivities
//! and then moves every conductivity toward the flux it carries:
//!
//! ```text
//! D <- D + gamma * (f(|Q|) - alpha * D),    f(x) = x^mu / (1 + x^mu)
//! ```
//!
//! Tubes that carry flow thicken toward `f(|Q|) / alpha`; tubes that carry
//! none decay geometrically by `1 - gamma * alpha` per step. Once the largest
//! change stays below `conv_eps` for [`SolverParams::stable_iters`]
//! consecutive steps the run is converged and edges at or below the prune
//! threshold are dropped.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{self, DEFAULT_TOLERANCE};
use crate::graph::{validate, EdgeId, Network, TerminalConfig, VertexId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    /// Feedback exponent.
    pub mu: f64,
    /// Decay rate.
    pub alpha: f64,
    /// Euler step size, in `(0, 1]`.
    pub gamma: f64,
    pub init_conductivity: f64,
    pub prune_threshold: f64,
    pub max_iters: usize,
    pub conv_eps: f64,
    /// Consecutive calm iterations required to declare convergence.
    pub stable_iters: usize,
    /// Total inflow `I0`.
    pub inflow: f64,
    /// Residual tolerance of each pressure solve.
    pub tol: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            mu: 2.0,
            alpha: 1.0,
            gamma: 0.1,
            init_conductivity: 0.5,
            prune_threshold: 1e-6,
            max_iters: 20_000,
            conv_eps: 1e-10,
            stable_iters: 10,
            inflow: 1.0,
            tol: DEFAULT_TOLERANCE,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |name, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("{x} is not positive")))
            }
        };
        positive("mu", self.mu)?;
        positive("alpha", self.alpha)?;
        positive("gamma", self.gamma)?;
        positive("init_conductivity", self.init_conductivity)?;
        positive("conv_eps", self.conv_eps)?;
        positive("inflow", self.inflow)?;
        positive("tol", self.tol)?;
        if self.gamma > 1.0 {
            return Err(Error::param("gamma", format!("{} exceeds 1", self.gamma)));
        }
        if self.gamma * self.alpha > 1.0 {
            return Err(Error::param("alpha", "gamma * alpha must not exceed 1"));
        }
        if !(self.prune_threshold >= 0.0) {
            return Err(Error::param("prune_threshold", "must be non-negative"));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", "must be positive"));
        }
        if self.stable_iters == 0 {
            return Err(Error::param("stable_iters", "must be positive"));
        }
        Ok(())
    }
}

/// Saturating feedback `x^mu / (1 + x^mu)` of the absolute flux.
pub fn feedback(flux: f64, mu: f64) -> f64 {
    let x = flux.abs().powf(mu);
    if x.is_infinite() {
        1.0
    } else {
        x / (1.0 + x)
    }
}

/// One explicit Euler step of the conductivity law on every edge.
/// Returns the largest absolute change.
pub fn update_conductivities(network: &mut Network, params: &SolverParams) -> f64 {
    let mut max_delta: f64 = 0.0;
    for e in network.edges_mut() {
        let next = relax(e.conductivity, feedback(e.flux, params.mu), params);
        max_delta = max_delta.max((next - e.conductivity).abs());
        e.conductivity = next;
    }
    max_delta
}

/// Single-edge Euler step given the feedback response.
pub(crate) fn relax(conductivity: f64, response: f64, params: &SolverParams) -> f64 {
    (conductivity + params.gamma * (response - params.alpha * conductivity)).max(0.0)
}

/// Removes edges with `D <= threshold`, keeping every vertex. A zero
/// threshold disables pruning.
pub fn prune_edges(network: &Network, threshold: f64, terminals: &TerminalConfig) -> Result<Network> {
    if !(threshold >= 0.0) {
        return Err(Error::param("threshold", "must be non-negative"));
    }
    if threshold == 0.0 {
        return Ok(network.clone());
    }
    let kept = network.edges().iter().filter(|e| e.conductivity > threshold).cloned().collect();
    let pruned = network.with_edges(kept);
    check_sources_reach_sinks(&pruned, terminals)?;
    Ok(pruned)
}

fn check_sources_reach_sinks(network: &Network, terminals: &TerminalConfig) -> Result<()> {
    let label = network.components_by(|_| true);
    for &(s, _) in &terminals.sources {
        if !terminals.sinks.iter().any(|&(t, _)| label[t.0] == label[s.0]) {
            return Err(Error::PruneDisconnectsTerminals { source_vertex: s });
        }
    }
    Ok(())
}

/// Per-iteration summary of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationSummary {
    pub iteration: usize,
    /// Largest `|ΔD|` produced by this iteration's update.
    pub max_delta: f64,
    /// Net flux leaving the source vertices.
    pub source_outflow: f64,
    /// Largest `|Q|` over all edges.
    pub max_flux: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    /// Network after the last update, with fluxes recomputed for the final
    /// conductivities.
    pub final_network: Network,
    /// Edges of `final_network` with `D` above the prune threshold.
    pub surviving: Vec<EdgeId>,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<IterationSummary>,
}

impl SolverResult {
    pub fn surviving_length(&self) -> f64 {
        self.surviving.iter().map(|&e| self.final_network.edge(e).length).sum()
    }

    /// Surviving edges as unordered vertex pairs, smaller id first.
    pub fn surviving_pairs(&self) -> Vec<(VertexId, VertexId)> {
        let mut pairs: Vec<_> = self
            .surviving
            .iter()
            .map(|&id| {
                let e = self.final_network.edge(id);
                (e.u.min(e.v), e.u.max(e.v))
            })
            .collect();
        pairs.sort();
        pairs
    }
}

/// Runs the loop with a fixed terminal assignment.
pub fn run_solver(network: &Network, terminals: &TerminalConfig, params: &SolverParams) -> Result<SolverResult> {
    run_solver_observed(network, terminals, params, &mut |_, _| {})
}

/// As [`run_solver`], calling `observer(iteration, network)` after each
/// flux solve and before the conductivity update.
pub fn run_solver_observed(
    network: &Network,
    terminals: &TerminalConfig,
    params: &SolverParams,
    observer: &mut dyn FnMut(usize, &Network),
) -> Result<SolverResult> {
    validate(network, terminals)?;
    let result = adapt(network, params, |_| Ok(terminals.clone()), observer)?;
    if params.prune_threshold > 0.0 {
        let survivors = result.final_network.with_edges(
            result.surviving.iter().map(|&e| result.final_network.edge(e).clone()).collect(),
        );
        check_sources_reach_sinks(&survivors, terminals)?;
    }
    Ok(result)
}

/// The loop itself, with the terminal assignment chosen per iteration.
pub(crate) fn adapt(
    network: &Network,
    params: &SolverParams,
    mut terminals_at: impl FnMut(usize) -> Result<TerminalConfig>,
    observer: &mut dyn FnMut(usize, &Network),
) -> Result<SolverResult> {
    params.validate()?;
    let mut net = network.clone();
    net.set_conductivity(params.init_conductivity);
    for e in net.edges_mut() {
        e.flux = 0.0;
    }

    let mut history = Vec::new();
    let mut calm = 0;
    let mut converged = false;
    let mut iterations = 0;
    let mut last_terminals = terminals_at(0)?;
    while iterations < params.max_iters {
        let terminals = terminals_at(iterations)?;
        flow::solve_flow(&mut net, &terminals, params.tol)?;
        observer(iterations, &net);
        let source_outflow = terminals.sources.iter().map(|&(s, _)| net.net_outflow(s)).sum();
        let max_flux = net.edges().iter().map(|e| e.flux.abs()).fold(0.0, f64::max);
        let max_delta = update_conductivities(&mut net, params);
        history.push(IterationSummary { iteration: iterations, max_delta, source_outflow, max_flux });
        iterations += 1;
        last_terminals = terminals;
        calm = if max_delta < params.conv_eps { calm + 1 } else { 0 };
        if calm >= params.stable_iters {
            converged = true;
            break;
        }
    }
    flow::solve_flow(&mut net, &last_terminals, params.tol)?;

    let surviving = net
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| params.prune_threshold == 0.0 || e.conductivity > params.prune_threshold)
        .map(|(i, _)| EdgeId(i))
        .collect();
    Ok(SolverResult { final_network: net, surviving, iterations, converged, history })
}

/// The network restricted to the surviving edges, carrying their final `D`
/// and `Q`. Check [`SolverResult::converged`] before trusting it as a
/// steady state.
pub fn extract_subgraph(result: &SolverResult) -> Result<Network> {
    if result.surviving.is_empty() {
        return Err(Error::EmptyNetwork);
    }
    let edges = result.surviving.iter().map(|&e| result.final_network.edge(e).clone()).collect();
    Ok(result.final_network.with_edges(edges))
}
