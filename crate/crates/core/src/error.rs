use thiserror::Error;

use crate::graph::VertexId;
use crate::hex::AxialCoord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the engines can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("duplicate edge between {u} and {v}")]
    DuplicateEdge { u: String, v: String },
    #[error("edge {u}-{v} has non-positive length {length}")]
    NonPositiveLength { u: String, v: String, length: f64 },
    #[error("self loop at vertex {0}")]
    SelfLoop(String),
    #[error("network is empty")]
    EmptyNetwork,
    #[error("network is disconnected: vertex {0} is unreachable")]
    Disconnected(VertexId),
    #[error("terminal {0} is not a vertex of the network")]
    UnknownTerminal(VertexId),
    #[error("vertex {0} is both a source and a sink")]
    OverlappingTerminals(VertexId),
    #[error("terminal {vertex} has non-positive amount {amount}")]
    NonPositiveAmount { vertex: VertexId, amount: f64 },
    #[error("unbalanced flow: inflow {inflow} vs outflow {outflow}")]
    UnbalancedFlow { inflow: f64, outflow: f64 },
    #[error("singular pressure system: {0}")]
    SingularSystem(String),
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("pruning disconnects source {source_vertex} from every sink")]
    PruneDisconnectsTerminals { source_vertex: VertexId },
    #[error("too few terminals: need at least {needed}, got {got}")]
    TooFewTerminals { needed: usize, got: usize },
    #[error("surviving subgraph does not connect terminal {0}")]
    DisconnectedTerminals(VertexId),
    #[error("cell {0} lies outside the grid")]
    OutOfGrid(AxialCoord),
    #[error("agent {0} has no free frontier cell")]
    EmptyFrontier(usize),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("maze has more than one {0}")]
    MultipleSources(char),
    #[error("maze has no {0}")]
    MissingTerminal(char),
    #[error("maze has no corridor path from S to T")]
    NoPath,
    #[error("maze row {row} has width {width}, expected {expected}")]
    RaggedRows { row: usize, width: usize, expected: usize },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
