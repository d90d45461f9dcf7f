//! Terminal strategies: which vertices inject and absorb flow on each
//! iteration, and the multi-terminal Steiner loop built on them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adaptation::{adapt, SolverParams, SolverResult};
use crate::error::{Error, Result};
use crate::graph::{validate, Network, TerminalConfig, VertexId};

/// How a total flow is divided among several sources or sinks.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub enum FlowSplit {
    #[default]
    Equal,
    /// Proportional to the given positive weights, one per terminal.
    Weighted(Vec<f64>),
}

impl FlowSplit {
    fn shares(&self, k: usize, total: f64) -> Result<Vec<f64>> {
        match self {
            FlowSplit::Equal => Ok(vec![total / k as f64; k]),
            FlowSplit::Weighted(w) => {
                if w.len() != k {
                    return Err(Error::param("split", format!("{} weights for {k} terminals", w.len())));
                }
                if w.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                    return Err(Error::param("split", "weights must be positive"));
                }
                let sum: f64 = w.iter().sum();
                Ok(w.iter().map(|x| total * x / sum).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StrategyMode {
    /// One source, one sink.
    Siso { source: VertexId, sink: VertexId },
    /// Several sources feeding one sink.
    Miso { sources: Vec<VertexId>, sink: VertexId, split: FlowSplit },
    /// One source feeding several sinks.
    Simo { source: VertexId, sinks: Vec<VertexId>, split: FlowSplit },
    /// Each iteration a random ordered pair of distinct terminals carries
    /// the whole inflow. The pair is a pure function of `(seed, iteration)`.
    Mimo { terminals: Vec<VertexId>, seed: u64 },
}

impl StrategyMode {
    pub fn terminals(&self) -> Vec<VertexId> {
        match self {
            StrategyMode::Siso { source, sink } => vec![*source, *sink],
            StrategyMode::Miso { sources, sink, .. } => sources.iter().copied().chain([*sink]).collect(),
            StrategyMode::Simo { source, sinks, .. } => [*source].into_iter().chain(sinks.iter().copied()).collect(),
            StrategyMode::Mimo { terminals, .. } => terminals.clone(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            StrategyMode::Siso { .. } => "siso",
            StrategyMode::Miso { .. } => "miso",
            StrategyMode::Simo { .. } => "simo",
            StrategyMode::Mimo { .. } => "mimo",
        }
    }

    fn check(&self) -> Result<()> {
        let (needed, got) = match self {
            StrategyMode::Siso { source, sink } => {
                if source == sink {
                    return Err(Error::OverlappingTerminals(*source));
                }
                (2, 2)
            }
            StrategyMode::Miso { sources, .. } => (2, sources.len() + 1),
            StrategyMode::Simo { sinks, .. } => (2, sinks.len() + 1),
            StrategyMode::Mimo { terminals, .. } => (2, terminals.len()),
        };
        if got < needed || self.terminals().len() < needed {
            return Err(Error::TooFewTerminals { needed, got });
        }
        let mut seen = self.terminals();
        seen.sort();
        if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::OverlappingTerminals(w[0]));
        }
        Ok(())
    }
}

/// Ordered (source, sink) index pair drawn for one MIMO iteration.
fn mimo_pair(k: usize, seed: u64, iteration: usize) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(iteration as u64);
    let i = rng.random_range(0..k);
    let mut j = rng.random_range(0..k - 1);
    if j >= i {
        j += 1;
    }
    (i, j)
}

/// Terminal assignment for one iteration. Inflow and outflow always balance
/// exactly: the sink side absorbs the float sum of what the sources inject.
pub fn make_terminals(mode: &StrategyMode, iteration: usize, inflow: f64) -> Result<TerminalConfig> {
    mode.check()?;
    if !(inflow > 0.0) || !inflow.is_finite() {
        return Err(Error::param("inflow", format!("{inflow} is not positive")));
    }
    Ok(match mode {
        StrategyMode::Siso { source, sink } => TerminalConfig::single(*source, *sink, inflow),
        StrategyMode::Miso { sources, sink, split } => {
            let shares = split.shares(sources.len(), inflow)?;
            let sources: Vec<_> = sources.iter().copied().zip(shares).collect();
            let total = sources.iter().map(|&(_, a)| a).sum();
            TerminalConfig { sources, sinks: vec![(*sink, total)] }
        }
        StrategyMode::Simo { source, sinks, split } => {
            let shares = split.shares(sinks.len(), inflow)?;
            let sinks: Vec<_> = sinks.iter().copied().zip(shares).collect();
            let total = sinks.iter().map(|&(_, a)| a).sum();
            TerminalConfig { sources: vec![(*source, total)], sinks }
        }
        StrategyMode::Mimo { terminals, seed } => {
            let (i, j) = mimo_pair(terminals.len(), *seed, iteration);
            TerminalConfig::single(terminals[i], terminals[j], inflow)
        }
    })
}

/// Multi-terminal adaptation: runs the loop with the per-iteration terminals
/// of `mode` and checks that the survivors still join every terminal.
pub fn steiner_approx(network: &Network, mode: &StrategyMode, params: &SolverParams) -> Result<SolverResult> {
    steiner_approx_observed(network, mode, params, &mut |_, _| {})
}

pub fn steiner_approx_observed(
    network: &Network,
    mode: &StrategyMode,
    params: &SolverParams,
    observer: &mut dyn FnMut(usize, &Network),
) -> Result<SolverResult> {
    let terminals = mode.terminals();
    if terminals.len() < 3 {
        return Err(Error::TooFewTerminals { needed: 3, got: terminals.len() });
    }
    validate(network, &make_terminals(mode, 0, params.inflow)?)?;
    if let Some(&t) = terminals.iter().find(|t| !network.contains(**t)) {
        return Err(Error::UnknownTerminal(t));
    }
    let result = adapt(network, params, |it| make_terminals(mode, it, params.inflow), observer)?;

    let label = result.final_network.components_by(|e| {
        params.prune_threshold == 0.0 || e.conductivity > params.prune_threshold
    });
    let root = label[terminals[0].0];
    if let Some(&t) = terminals.iter().find(|t| label[t.0] != root) {
        return Err(Error::DisconnectedTerminals(t));
    }
    Ok(result)
}
