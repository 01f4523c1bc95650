//! Per-source reception accounting and the periodic low-rate detector.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::stimulus::Step;
use crate::topology::NodeId;

/// Request sent by `requester` asking a neighbor to raise the dissemination
/// probability for traffic originating at `about_source`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StimulusMessage {
    pub requester: NodeId,
    pub about_source: NodeId,
    pub issue_time: Step,
}

/// Detector parameters. `rates[i]` is the expected generation rate of node
/// `i` in events per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorParams {
    pub alpha: f64,
    pub t_mon: Step,
    pub rates: Vec<f64>,
}

impl MonitorParams {
    pub fn uniform(n: usize, rate: f64, alpha: f64, t_mon: Step) -> Self {
        Self {
            alpha,
            t_mon,
            rates: vec![rate; n],
        }
    }
}

/// Tumbling-window reception statistics of one peer.
#[derive(Debug, Clone)]
pub struct ReceptionStats {
    window_counts: Vec<u32>,
    forwarders: Vec<Vec<NodeId>>,
    window_start: Step,
}

impl ReceptionStats {
    pub fn new(n: usize) -> Self {
        Self {
            window_counts: vec![0; n],
            forwarders: vec![Vec::new(); n],
            window_start: 0,
        }
    }

    /// Accounts one first-copy reception of a message from `source` that was
    /// delivered by neighbor `forwarder`.
    pub fn record_reception(&mut self, source: NodeId, forwarder: NodeId) {
        let s = source as usize;
        self.window_counts[s] += 1;
        let set = &mut self.forwarders[s];
        if let Err(pos) = set.binary_search(&forwarder) {
            set.insert(pos, forwarder);
        }
    }

    pub fn count(&self, source: NodeId) -> u32 {
        self.window_counts[source as usize]
    }

    /// Neighbors that delivered first copies from `source` this window, ascending.
    pub fn forwarders(&self, source: NodeId) -> &[NodeId] {
        &self.forwarders[source as usize]
    }

    pub fn window_start(&self) -> Step {
        self.window_start
    }

    pub fn total(&self) -> u64 {
        self.window_counts.iter().map(|&c| u64::from(c)).sum()
    }

    pub fn reset(&mut self, t: Step) {
        self.window_counts.iter_mut().for_each(|c| *c = 0);
        self.forwarders.iter_mut().for_each(Vec::clear);
        self.window_start = t;
    }
}

/// Sources `i != self_id` whose window count is strictly below
/// `alpha * rates[i] * t_mon`, in ascending id order.
pub fn retrieve_peers_low_rate(
    stats: &ReceptionStats,
    rates: &[f64],
    alpha: f64,
    t_mon: Step,
    self_id: NodeId,
) -> Vec<NodeId> {
    rates
        .iter()
        .enumerate()
        .filter(|&(i, _)| i as NodeId != self_id)
        .filter(|&(i, &rate)| f64::from(stats.window_counts[i]) < alpha * rate * t_mon as f64)
        .map(|(i, _)| i as NodeId)
        .collect()
}

/// The unique forwarder of `source`'s traffic if there is exactly one,
/// otherwise a uniformly random neighbor.
pub fn select_forwarder<R: Rng + ?Sized>(
    stats: &ReceptionStats,
    source: NodeId,
    neighbors: &[NodeId],
    rng: &mut R,
) -> NodeId {
    assert!(!neighbors.is_empty(), "peer has no neighbors");
    match stats.forwarders(source) {
        [only] => *only,
        _ => neighbors[rng.random_range(0..neighbors.len())],
    }
}

/// Runs the detector at a tick boundary and resets the window. Returns one
/// `(target neighbor, stimulus)` pair per under-served source.
pub fn monitor_tick<R: Rng + ?Sized>(
    stats: &mut ReceptionStats,
    params: &MonitorParams,
    self_id: NodeId,
    neighbors: &[NodeId],
    t: Step,
    rng: &mut R,
) -> Vec<(NodeId, StimulusMessage)> {
    let flagged =
        retrieve_peers_low_rate(stats, &params.rates, params.alpha, params.t_mon, self_id);
    let out = flagged
        .into_iter()
        .map(|source| {
            let target = select_forwarder(stats, source, neighbors, rng);
            let stimulus = StimulusMessage {
                requester: self_id,
                about_source: source,
                issue_time: t,
            };
            (target, stimulus)
        })
        .collect();
    stats.reset(t);
    out
}
