//! Lifelong multi-agent pickup and delivery (MAPD).
//!
//! Agents on a 4-connected grid serve a stream of pickup-and-delivery tasks without
//! colliding. Three planners are provided:
//!
//! * [`token::Protocol::TokenPassing`]: agents take turns with a shared token, each
//!   assigning itself the nearest task whose endpoints nobody else rests on.
//! * [`token::Protocol::TaskSwaps`]: like token passing, but an agent may take over a
//!   task from an agent that would reach its pickup location later.
//! * [`central`]: every timestep, a Hungarian assignment of endpoints to agents followed
//!   by two rounds of conflict-based search.
//!
//! [`sim::run`] drives any of them over a task stream and records metrics, trajectories,
//! and a collision audit. [`batch`] runs many independent simulations, in parallel when
//! the `parallel` feature is enabled.

pub mod assignment;
pub mod batch;
pub mod cbs;
pub mod central;
pub mod environment;
pub mod generate;
pub mod events;
pub mod pathing;
pub mod scenario;
pub mod sim;
pub mod tasking;
pub mod token;

/// Discrete time.
pub type Timestep = u32;
/// Index of an agent in [`environment::MapdInstance::agent_starts`].
pub type AgentId = usize;
/// Index of a task in its stream.
pub type TaskId = usize;
