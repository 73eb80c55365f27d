//! Decentralized dominant-value voting over a collective of agents.
//!
//! Agents hold a single integer knowledge state in `0..=k`. At every tick each
//! agent may push its current state to another agent, preferring a fixed set of
//! friends. An agent that has gathered `v` states integrates them (dominant
//! value, median consensus, or a random mix of the two) and adopts the result.
//!
//! The crate is `no_std` (it needs `alloc`) and has no IO. File formats, the
//! batch runner and the command line live in the `votesim` crate.
//!
//! Modules:
//! - [`model`]: knowledge values, agent state, configuration, friend graph, target selection.
//! - [`integrate`]: the pure integration operators.
//! - [`engine`]: the three-phase tick scheduler and trajectory recording.
//! - [`metrics`]: the observer's per-tick view and steady-state statistics.
//! - [`forecast`]: the layered forecast-aggregation replay and its evaluation report.

#![cfg_attr(not(test), no_std)]
#![deny(missing_docs)]

extern crate alloc;

pub mod engine;
mod error;
pub mod forecast;
pub mod integrate;
pub mod metrics;
pub mod model;

pub use engine::{run, Simulation, TickEvents, Trajectory};
pub use error::{Error, Result};
pub use integrate::{consensus_value, dominant_value, integrate, mixed_integrate, VoteSet};
pub use metrics::{clustering_gap, steady_change_rate, tick_metrics, TickMetrics};
pub use model::{
    make_friend_graph, make_symmetric_friend_graph, select_target, AgentId, AgentState, FriendGraph, KnowledgeValue,
    SimConfig, Strategy,
};

/// The generator used for every run. ChaCha8 is portable and reproducible
/// across platforms for a given seed.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Bernoulli trial that always consumes exactly one draw from `rng`,
/// including for `p == 0` and `p == 1`.
#[inline]
pub fn coin<R: rand::Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    rng.gen::<f64>() < p
}
