//! Flow-adaptive transport networks.
//!
//! Tubes carry flow between terminals, widen where the flow is heavy and
//! wither where it is not. Run long enough, the network shrinks to a short
//! path or a small tree. The same loop drives three engines:
//!
//! * [`adaptation`] and [`strategies`]: shortest paths and approximate
//!   Steiner trees on weighted graphs, on top of the linear solve in [`flow`].
//! * [`compete`]: agents growing over the [`hex`] lattice and competing for
//!   food.
//! * [`aco`]: an ant colony for the travelling salesman problem, with
//!   pheromone blended toward an adaptive network's conductances.
//!
//! [`io`] reads and writes the text formats used by the `physarum` binary.
//!
//! ```
//! use physarum::adaptation::{run_solver, SolverParams};
//! use physarum::graph::{Network, TerminalConfig};
//!
//! let net = Network::from_named_edges(&[("s", "a", 1.0), ("a", "t", 1.0), ("s", "t", 3.0)])?;
//! let (s, t) = (net.vertex_by_name("s").unwrap(), net.vertex_by_name("t").unwrap());
//! let result = run_solver(&net, &TerminalConfig::single(s, t, 1.0), &SolverParams::default())?;
//! assert_eq!(result.surviving_length(), 2.0);
//! # Ok::<(), physarum::Error>(())
//! ```

// `!(x > 0.0)` is how parameter checks reject NaN along with the rest.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod aco;
pub mod adaptation;
pub mod compete;
pub mod error;
pub mod flow;
pub mod graph;
pub mod hex;
pub mod io;
pub mod strategies;

pub use error::{Error, Result};

// The guide's code blocks run as doctests, one module per chapter so a
// failure points at its chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/flow.md")]
    mod flow {}
    #[doc = include_str!("../../../book/src/adaptation.md")]
    mod adaptation {}
    #[doc = include_str!("../../../book/src/strategies.md")]
    mod strategies {}
    #[doc = include_str!("../../../book/src/hex.md")]
    mod hex {}
    #[doc = include_str!("../../../book/src/competition.md")]
    mod competition {}
    #[doc = include_str!("../../../book/src/aco.md")]
    mod aco {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
}
