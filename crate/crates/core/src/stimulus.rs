//! Decaying dissemination thresholds.
//!
//! A threshold sits at its base probability until a stimulus arrives. A
//! stimulus adds `sigma` to the current (possibly partially decayed) value,
//! capped at 1, and the value then falls linearly back to the base over
//! `delta` steps measured from the most recent stimulus.

use rustc_hash::FxHashMap;

use serde::{Deserialize, Serialize};

use crate::topology::NodeId;

/// Simulation time in whole steps.
pub type Step = u64;

/// Base probability, stimulus increment and decay duration shared by every
/// threshold of one peer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdParams {
    pub base: f64,
    pub sigma: f64,
    pub delta: Step,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdState {
    pub params: ThresholdParams,
    pub level_at_last_stim: f64,
    pub last_stim_time: Option<Step>,
}

impl ThresholdState {
    pub fn new(params: ThresholdParams) -> Self {
        Self {
            params,
            level_at_last_stim: params.base,
            last_stim_time: None,
        }
    }

    /// Value of the threshold at `t`. Pure.
    pub fn compute_threshold(&self, t: Step) -> f64 {
        let ThresholdParams { base, delta, .. } = self.params;
        let Some(last) = self.last_stim_time else {
            return base;
        };
        debug_assert!(t >= last, "threshold queried before its last stimulus");
        let elapsed = t.saturating_sub(last);
        if delta == 0 || elapsed >= delta {
            return base;
        }
        let remaining = 1.0 - elapsed as f64 / delta as f64;
        (base + (self.level_at_last_stim - base) * remaining).clamp(base, 1.0)
    }

    /// Adds `sigma` to the value at `t` (capped at 1) and restarts the decay.
    pub fn apply_stimulus(&mut self, t: Step) {
        let current = self.compute_threshold(t);
        self.level_at_last_stim = (current + self.params.sigma).min(1.0);
        self.last_stim_time = Some(t);
    }
}

/// How a peer indexes its thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Keying {
    /// One threshold per neighbor the message is forwarded to.
    Receiver,
    /// One threshold per message generator.
    Source,
    /// One threshold per (generator, neighbor) pair.
    SourceReceiver,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ThresholdKey {
    Receiver(NodeId),
    Source(NodeId),
    Pair { source: NodeId, receiver: NodeId },
}

impl Keying {
    /// Key consulted when forwarding a message from `source` to `receiver`.
    pub fn forwarding_key(self, source: NodeId, receiver: NodeId) -> ThresholdKey {
        match self {
            Keying::Receiver => ThresholdKey::Receiver(receiver),
            Keying::Source => ThresholdKey::Source(source),
            Keying::SourceReceiver => ThresholdKey::Pair { source, receiver },
        }
    }

    /// Key raised when `requester` complains about traffic from `about_source`.
    pub fn stimulus_key(self, requester: NodeId, about_source: NodeId) -> ThresholdKey {
        self.forwarding_key(about_source, requester)
    }
}

/// Lazily populated threshold map; absent keys read as fresh base states.
#[derive(Debug, Clone)]
pub struct ThresholdTable {
    keying: Keying,
    params: ThresholdParams,
    entries: FxHashMap<ThresholdKey, ThresholdState>,
}

impl ThresholdTable {
    pub fn new(keying: Keying, params: ThresholdParams) -> Self {
        Self {
            keying,
            params,
            entries: FxHashMap::default(),
        }
    }

    pub fn keying(&self) -> Keying {
        self.keying
    }

    pub fn params(&self) -> ThresholdParams {
        self.params
    }

    pub fn compute_threshold(&self, key: ThresholdKey, t: Step) -> f64 {
        match self.entries.get(&key) {
            Some(state) => state.compute_threshold(t),
            None => self.params.base,
        }
    }

    pub fn apply_stimulus(&mut self, key: ThresholdKey, t: Step) {
        let params = self.params;
        self.entries
            .entry(key)
            .or_insert_with(|| ThresholdState::new(params))
            .apply_stimulus(t);
    }

    pub fn state(&self, key: ThresholdKey) -> ThresholdState {
        self.entries
            .get(&key)
            .copied()
            .unwrap_or_else(|| ThresholdState::new(self.params))
    }

    /// Number of materialized entries.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
