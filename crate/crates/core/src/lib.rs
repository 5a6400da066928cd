//! Deterministic simulator of covert command-and-control channels chained
//! through a 5G core network.
//!
//! The crate models a core network as an ordered list of signaling procedures
//! whose messages offer a few bits of embedding space each. Compromised
//! network functions piggyback a lightweight covert protocol (a 20-bit header
//! plus fragmented payload) onto those messages, or induce standardized
//! messages of their own, to move attack parameters from an entry point to an
//! execution point and results back out to an exit point.
//!
//! Modules:
//! - [`model`]: environment, procedure, message and attack tuples.
//! - [`fivegpp`]: the 20-bit covert header codec, keyring, cipher strategy
//!   and payload fragmentation.
//! - [`catalog`]: built-in registration procedure, attack parameter sets and
//!   transient channels.
//! - [`netgraph`]: connectivity graphs, feasibility checks and DOT export.
//! - [`routing`]: path flooding, round robin and weighted path selection plus
//!   per-node receive handling (TTL, duplicate suppression).
//! - [`engine`]: the discrete simulator and capacity sweeps.
//! - [`report`]: header overhead arithmetic and tabulation.
//! - [`scenario`]: JSON scenario files and the built-in scenario registry.

pub mod bits;
pub mod catalog;
pub mod engine;
pub mod fivegpp;
pub mod model;
pub mod netgraph;
pub mod report;
pub mod routing;
pub mod scenario;

pub use bits::Bits;
pub use model::{
    Attack, AttackType, Direction, Environment, Mode, NodeId, Procedure, ProcedureMessage,
    RoutingOption, TransientChannel,
};
