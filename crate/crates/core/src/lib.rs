//! Deterministic simulation of adaptive gossip dissemination on random
//! peer-to-peer overlays.
//!
//! The crate is split along the life of an experiment:
//!
//! * [`topology`] builds and validates overlays and reads/writes DOT.
//! * [`protocol`], [`stimulus`] and [`monitoring`] hold the per-peer
//!   dissemination logic: fixed probability, probabilistic broadcast and
//!   three stimulus-driven adaptive variants.
//! * [`sim`] runs one time-stepped simulation and produces a [`sim::Trace`].
//! * [`metrics`] and [`curves`] turn traces into coverage, delay and
//!   overhead-ratio figures.
//! * [`experiment`] sweeps policies and parameters over graph sets.

pub mod cache;
pub mod curves;
pub mod experiment;
pub mod metrics;
pub mod monitoring;
pub mod protocol;
pub mod rng;
pub mod sim;
pub mod stimulus;
pub mod topology;

pub use metrics::{AggregateRow, MetricsReport};
pub use protocol::{Message, PolicyKind};
pub use sim::{SimConfig, Trace};
pub use topology::{Graph, NodeId};
