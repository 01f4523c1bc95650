//! Dissemination policies as per-peer state machines.
//!
//! Every policy consumes one uniform draw per considered neighbor, visiting
//! neighbors in ascending id order; probabilistic broadcast instead takes a
//! single gate draw for relayed messages. Forwarded copies carry `ttl - 1`
//! and `hops + 1`, and a copy holding `ttl == 0` is never forwarded.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cache::LruSet;
use crate::monitoring::{self, MonitorParams, ReceptionStats, StimulusMessage};
use crate::rng::{self, Purpose, StreamRng};
use crate::stimulus::{Keying, Step, ThresholdKey, ThresholdParams, ThresholdTable};
use crate::topology::NodeId;

/// A game event copy in flight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Message {
    pub id: u64,
    pub source: NodeId,
    pub creation_time: Step,
    pub ttl: u32,
    pub hops: u32,
}

impl Message {
    pub fn new(id: u64, source: NodeId, creation_time: Step, ttl: u32) -> Self {
        Self {
            id,
            source,
            creation_time,
            ttl,
            hops: 0,
        }
    }

    /// The copy a holder transmits, or `None` once the hop budget is spent.
    pub fn relayed(&self) -> Option<Message> {
        (self.ttl > 0).then(|| Message {
            ttl: self.ttl - 1,
            hops: self.hops + 1,
            ..*self
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    FirstCopy,
    Duplicate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transmission {
    Data {
        to: NodeId,
        msg: Message,
    },
    Stimulus {
        to: NodeId,
        stimulus: StimulusMessage,
    },
}

impl Transmission {
    pub fn target(&self) -> NodeId {
        match *self {
            Transmission::Data { to, .. } | Transmission::Stimulus { to, .. } => to,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "fixed-prob")]
    FixedProbability,
    #[serde(rename = "prob-bcast")]
    ProbabilisticBroadcast,
    #[serde(rename = "adaptive1")]
    Adaptive1,
    #[serde(rename = "adaptive2")]
    Adaptive2,
    #[serde(rename = "adaptive3")]
    Adaptive3,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::FixedProbability,
        PolicyKind::ProbabilisticBroadcast,
        PolicyKind::Adaptive1,
        PolicyKind::Adaptive2,
        PolicyKind::Adaptive3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::FixedProbability => "fixed-prob",
            PolicyKind::ProbabilisticBroadcast => "prob-bcast",
            PolicyKind::Adaptive1 => "adaptive1",
            PolicyKind::Adaptive2 => "adaptive2",
            PolicyKind::Adaptive3 => "adaptive3",
        }
    }

    /// Threshold keying of the adaptive variants.
    pub fn keying(self) -> Option<Keying> {
        match self {
            PolicyKind::Adaptive1 => Some(Keying::Receiver),
            PolicyKind::Adaptive2 => Some(Keying::Source),
            PolicyKind::Adaptive3 => Some(Keying::SourceReceiver),
            _ => None,
        }
    }

    pub fn is_adaptive(self) -> bool {
        self.keying().is_some()
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownPolicy(pub String);

impl fmt::Display for UnknownPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown policy {:?} (expected one of fixed-prob, prob-bcast, adaptive1, adaptive2, adaptive3)",
            self.0
        )
    }
}

impl std::error::Error for UnknownPolicy {}

impl FromStr for PolicyKind {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| UnknownPolicy(s.to_string()))
    }
}

/// Mutable state owned by one peer for the duration of a run.
#[derive(Debug, Clone)]
pub struct PeerState {
    pub node_id: NodeId,
    pub dedup_cache: LruSet,
    pub thresholds: ThresholdTable,
    pub reception_stats: ReceptionStats,
    pub forward_rng: StreamRng,
    pub selection_rng: StreamRng,
}

impl PeerState {
    pub fn new(
        node_id: NodeId,
        n: usize,
        cache_capacity: usize,
        keying: Keying,
        threshold: ThresholdParams,
        run_seed: u64,
    ) -> Self {
        Self {
            node_id,
            dedup_cache: LruSet::new(cache_capacity),
            thresholds: ThresholdTable::new(keying, threshold),
            reception_stats: ReceptionStats::new(n),
            forward_rng: rng::stream(run_seed, node_id, Purpose::Forwarding),
            selection_rng: rng::stream(run_seed, node_id, Purpose::ForwarderSelection),
        }
    }

    /// Records `msg` as seen; the first sighting is the only one processed.
    pub fn accept_or_drop(&mut self, msg: &Message) -> Verdict {
        if self.dedup_cache.touch(msg.id) {
            Verdict::FirstCopy
        } else {
            Verdict::Duplicate
        }
    }
}

fn candidates(neighbors: &[NodeId], from: Option<NodeId>) -> impl Iterator<Item = NodeId> + '_ {
    neighbors.iter().copied().filter(move |&n| Some(n) != from)
}

/// Forwards to each neighbor other than `from` independently with probability `v0`.
pub fn fixed_probability_forward(
    peer: &mut PeerState,
    msg: &Message,
    from: Option<NodeId>,
    neighbors: &[NodeId],
    v0: f64,
    out: &mut Vec<Transmission>,
) {
    let Some(copy) = msg.relayed() else { return };
    for n in candidates(neighbors, from) {
        if peer.forward_rng.random::<f64>() < v0 {
            out.push(Transmission::Data { to: n, msg: copy });
        }
    }
}

/// Locally generated messages go to every neighbor; relayed ones go to all
/// neighbors except `from` if a single draw succeeds, otherwise nowhere.
pub fn probabilistic_broadcast_forward(
    peer: &mut PeerState,
    msg: &Message,
    from: Option<NodeId>,
    neighbors: &[NodeId],
    v0: f64,
    out: &mut Vec<Transmission>,
) {
    let Some(copy) = msg.relayed() else { return };
    let local = msg.source == peer.node_id;
    if local || peer.forward_rng.random::<f64>() < v0 {
        out.extend(candidates(neighbors, from).map(|to| Transmission::Data { to, msg: copy }));
    }
}

/// Per-neighbor thresholds keyed by the receiving neighbor.
pub fn adaptive1_forward(
    peer: &mut PeerState,
    msg: &Message,
    from: Option<NodeId>,
    neighbors: &[NodeId],
    t: Step,
    out: &mut Vec<Transmission>,
) {
    let Some(copy) = msg.relayed() else { return };
    for n in candidates(neighbors, from) {
        let threshold = peer
            .thresholds
            .compute_threshold(ThresholdKey::Receiver(n), t);
        if peer.forward_rng.random::<f64>() < threshold {
            out.push(Transmission::Data { to: n, msg: copy });
        }
    }
}

/// One threshold per generator, looked up once and shared by all draws.
pub fn adaptive2_forward(
    peer: &mut PeerState,
    msg: &Message,
    from: Option<NodeId>,
    neighbors: &[NodeId],
    t: Step,
    out: &mut Vec<Transmission>,
) {
    let Some(copy) = msg.relayed() else { return };
    let gamma = peer
        .thresholds
        .compute_threshold(ThresholdKey::Source(msg.source), t);
    for n in candidates(neighbors, from) {
        if peer.forward_rng.random::<f64>() < gamma {
            out.push(Transmission::Data { to: n, msg: copy });
        }
    }
}

/// Thresholds keyed by the (generator, receiving neighbor) pair.
pub fn adaptive3_forward(
    peer: &mut PeerState,
    msg: &Message,
    from: Option<NodeId>,
    neighbors: &[NodeId],
    t: Step,
    out: &mut Vec<Transmission>,
) {
    let Some(copy) = msg.relayed() else { return };
    for n in candidates(neighbors, from) {
        let key = ThresholdKey::Pair {
            source: msg.source,
            receiver: n,
        };
        let threshold = peer.thresholds.compute_threshold(key, t);
        if peer.forward_rng.random::<f64>() < threshold {
            out.push(Transmission::Data { to: n, msg: copy });
        }
    }
}

/// Hooks the simulation engine drives for every peer.
pub trait DisseminationPolicy: Send + Sync {
    fn kind(&self) -> PolicyKind;

    /// Forwarding decision for a first copy held by `peer`.
    fn forward(
        &self,
        peer: &mut PeerState,
        msg: &Message,
        from: Option<NodeId>,
        neighbors: &[NodeId],
        t: Step,
        out: &mut Vec<Transmission>,
    );

    /// A new event produced by the application at `peer`.
    fn on_local_event(
        &self,
        peer: &mut PeerState,
        msg: &Message,
        neighbors: &[NodeId],
        t: Step,
        out: &mut Vec<Transmission>,
    ) {
        peer.accept_or_drop(msg);
        self.forward(peer, msg, None, neighbors, t, out);
    }

    /// A copy delivered by neighbor `from`. Duplicates are dropped.
    fn on_receive(
        &self,
        peer: &mut PeerState,
        msg: &Message,
        from: NodeId,
        neighbors: &[NodeId],
        t: Step,
        out: &mut Vec<Transmission>,
    ) -> Verdict {
        let verdict = peer.accept_or_drop(msg);
        if verdict == Verdict::FirstCopy {
            peer.reception_stats.record_reception(msg.source, from);
            self.forward(peer, msg, Some(from), neighbors, t, out);
        }
        verdict
    }

    fn on_stimulus(&self, _peer: &mut PeerState, _stimulus: &StimulusMessage, _t: Step) {}

    fn on_monitor_tick(
        &self,
        _peer: &mut PeerState,
        _neighbors: &[NodeId],
        _t: Step,
        _out: &mut Vec<Transmission>,
    ) {
    }

    /// Monitoring period, if the policy runs the low-rate detector.
    fn monitoring_period(&self) -> Option<Step> {
        None
    }
}

#[derive(Debug, Clone)]
pub struct FixedProbability {
    pub v0: f64,
}

impl DisseminationPolicy for FixedProbability {
    fn kind(&self) -> PolicyKind {
        PolicyKind::FixedProbability
    }

    fn forward(
        &self,
        peer: &mut PeerState,
        msg: &Message,
        from: Option<NodeId>,
        neighbors: &[NodeId],
        _t: Step,
        out: &mut Vec<Transmission>,
    ) {
        fixed_probability_forward(peer, msg, from, neighbors, self.v0, out);
    }
}

#[derive(Debug, Clone)]
pub struct ProbabilisticBroadcast {
    pub v0: f64,
}

impl DisseminationPolicy for ProbabilisticBroadcast {
    fn kind(&self) -> PolicyKind {
        PolicyKind::ProbabilisticBroadcast
    }

    fn forward(
        &self,
        peer: &mut PeerState,
        msg: &Message,
        from: Option<NodeId>,
        neighbors: &[NodeId],
        _t: Step,
        out: &mut Vec<Transmission>,
    ) {
        probabilistic_broadcast_forward(peer, msg, from, neighbors, self.v0, out);
    }
}

/// The three stimulus-driven variants; they differ only in threshold keying.
#[derive(Debug, Clone)]
pub struct AdaptiveGossip {
    pub keying: Keying,
    pub monitor: MonitorParams,
}

impl DisseminationPolicy for AdaptiveGossip {
    fn kind(&self) -> PolicyKind {
        match self.keying {
            Keying::Receiver => PolicyKind::Adaptive1,
            Keying::Source => PolicyKind::Adaptive2,
            Keying::SourceReceiver => PolicyKind::Adaptive3,
        }
    }

    fn forward(
        &self,
        peer: &mut PeerState,
        msg: &Message,
        from: Option<NodeId>,
        neighbors: &[NodeId],
        t: Step,
        out: &mut Vec<Transmission>,
    ) {
        match self.keying {
            Keying::Receiver => adaptive1_forward(peer, msg, from, neighbors, t, out),
            Keying::Source => adaptive2_forward(peer, msg, from, neighbors, t, out),
            Keying::SourceReceiver => adaptive3_forward(peer, msg, from, neighbors, t, out),
        }
    }

    fn on_stimulus(&self, peer: &mut PeerState, stimulus: &StimulusMessage, t: Step) {
        let key = self
            .keying
            .stimulus_key(stimulus.requester, stimulus.about_source);
        peer.thresholds.apply_stimulus(key, t);
    }

    fn on_monitor_tick(
        &self,
        peer: &mut PeerState,
        neighbors: &[NodeId],
        t: Step,
        out: &mut Vec<Transmission>,
    ) {
        let requests = monitoring::monitor_tick(
            &mut peer.reception_stats,
            &self.monitor,
            peer.node_id,
            neighbors,
            t,
            &mut peer.selection_rng,
        );
        out.extend(
            requests
                .into_iter()
                .map(|(to, stimulus)| Transmission::Stimulus { to, stimulus }),
        );
    }

    fn monitoring_period(&self) -> Option<Step> {
        Some(self.monitor.t_mon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const NEIGHBORS: [NodeId; 4] = [1, 2, 3, 4];
    const TRIALS: usize = 100_000;

    fn peer(node_id: NodeId, keying: Keying, base: f64, sigma: f64) -> PeerState {
        let params = ThresholdParams {
            base,
            sigma,
            delta: 1000,
        };
        PeerState::new(node_id, 16, 256, keying, params, 2024)
    }

    fn relayed(source: NodeId) -> Message {
        Message {
            id: 1,
            source,
            creation_time: 0,
            ttl: 7,
            hops: 1,
        }
    }

    fn targets(out: &[Transmission]) -> Vec<NodeId> {
        out.iter().map(Transmission::target).collect()
    }

    /// Per-neighbor forward frequencies over repeated independent decisions.
    fn frequencies(mut decide: impl FnMut(&mut Vec<Transmission>)) -> [f64; 16] {
        let mut counts = [0u32; 16];
        let mut out = Vec::new();
        for _ in 0..TRIALS {
            out.clear();
            decide(&mut out);
            for t in &out {
                counts[t.target() as usize] += 1;
            }
        }
        counts.map(|c| f64::from(c) / TRIALS as f64)
    }

    #[test]
    fn policy_names_round_trip() {
        for kind in PolicyKind::ALL {
            assert_eq!(kind.name().parse::<PolicyKind>(), Ok(kind));
        }
        assert!("fixed-fanout".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn fixed_probability_one_skips_sender() {
        let mut p = peer(0, Keying::Receiver, 1.0, 0.0);
        let mut out = Vec::new();
        fixed_probability_forward(&mut p, &relayed(9), Some(2), &NEIGHBORS, 1.0, &mut out);
        assert_eq!(targets(&out), vec![1, 3, 4]);
        for t in &out {
            let Transmission::Data { msg, .. } = t else {
                panic!()
            };
            assert_eq!((msg.ttl, msg.hops), (6, 2));
        }
    }

    #[test]
    fn fixed_probability_zero_local() {
        let mut p = peer(0, Keying::Receiver, 1.0, 0.0);
        let mut out = Vec::new();
        fixed_probability_forward(
            &mut p,
            &Message::new(1, 0, 0, 8),
            None,
            &NEIGHBORS,
            0.0,
            &mut out,
        );
        assert!(out.is_empty());
    }

    #[test]
    fn exhausted_ttl_is_not_forwarded() {
        let mut p = peer(0, Keying::Receiver, 1.0, 0.0);
        let msg = Message {
            ttl: 0,
            hops: 8,
            ..Message::new(3, 5, 0, 8)
        };
        let mut out = Vec::new();
        fixed_probability_forward(&mut p, &msg, Some(1), &NEIGHBORS, 1.0, &mut out);
        probabilistic_broadcast_forward(&mut p, &msg, Some(1), &NEIGHBORS, 1.0, &mut out);
        adaptive1_forward(&mut p, &msg, Some(1), &NEIGHBORS, 0, &mut out);
        assert!(out.is_empty());
    }

    #[test]
    fn fixed_probability_half_frequency() {
        let mut p = peer(0, Keying::Receiver, 0.5, 0.0);
        let freq = frequencies(|out| {
            fixed_probability_forward(&mut p, &relayed(9), None, &NEIGHBORS, 0.5, out)
        });
        for n in NEIGHBORS {
            assert!(
                (freq[n as usize] - 0.5).abs() < 0.01,
                "{n}: {}",
                freq[n as usize]
            );
        }
    }

    #[test]
    fn broadcast_local_event_reaches_everyone() {
        let mut p = peer(0, Keying::Receiver, 0.0, 0.0);
        let mut out = Vec::new();
        probabilistic_broadcast_forward(
            &mut p,
            &Message::new(1, 0, 0, 8),
            None,
            &NEIGHBORS,
            0.0,
            &mut out,
        );
        assert_eq!(targets(&out), NEIGHBORS.to_vec());
    }

    #[test]
    fn broadcast_relay_with_zero_probability() {
        let mut p = peer(0, Keying::Receiver, 0.0, 0.0);
        let mut out = Vec::new();
        for _ in 0..1000 {
            probabilistic_broadcast_forward(
                &mut p,
                &relayed(9),
                Some(1),
                &NEIGHBORS,
                0.0,
                &mut out,
            );
        }
        assert!(out.is_empty());
    }

    #[test]
    fn broadcast_relay_is_all_or_nothing() {
        let mut p = peer(0, Keying::Receiver, 0.3, 0.0);
        let mut all = 0;
        let mut out = Vec::new();
        for _ in 0..TRIALS {
            out.clear();
            probabilistic_broadcast_forward(
                &mut p,
                &relayed(9),
                Some(1),
                &NEIGHBORS,
                0.3,
                &mut out,
            );
            match out.len() {
                0 => {}
                3 => all += 1,
                k => panic!("partial broadcast of {k}"),
            }
        }
        let freq = f64::from(all) / TRIALS as f64;
        assert!((freq - 0.3).abs() < 0.01, "{freq}");
    }

    #[test]
    fn adaptive1_saturated_matches_flooding() {
        let mut p = peer(0, Keying::Receiver, 1.0, 0.3);
        let mut out = Vec::new();
        adaptive1_forward(&mut p, &relayed(9), Some(3), &NEIGHBORS, 10, &mut out);
        assert_eq!(targets(&out), vec![1, 2, 4]);
    }

    #[test]
    fn adaptive1_stimulated_neighbor_rate() {
        let (v0, sigma) = (0.3, 0.4);
        let mut p = peer(0, Keying::Receiver, v0, sigma);
        p.thresholds.apply_stimulus(ThresholdKey::Receiver(2), 10);
        let expected = p
            .thresholds
            .compute_threshold(ThresholdKey::Receiver(2), 10);
        assert!((expected - 0.7).abs() < 1e-12);
        let freq =
            frequencies(|out| adaptive1_forward(&mut p, &relayed(9), None, &NEIGHBORS, 10, out));
        assert!((freq[2] - expected).abs() < 0.01, "{}", freq[2]);
        for n in [1, 3, 4] {
            assert!((freq[n] - v0).abs() < 0.01, "{n}: {}", freq[n]);
        }
    }

    #[test]
    fn zero_sigma_collapses_to_fixed_probability() {
        let v0 = 0.35;
        for keying in [Keying::Receiver, Keying::Source, Keying::SourceReceiver] {
            let mut p = peer(0, keying, v0, 0.0);
            for (req, src) in [(1, 9), (2, 9), (3, 5)] {
                p.thresholds
                    .apply_stimulus(keying.stimulus_key(req, src), 4);
            }
            let policy = AdaptiveGossip {
                keying,
                monitor: MonitorParams::uniform(16, 0.01, 1.0, 50),
            };
            let freq =
                frequencies(|out| policy.forward(&mut p, &relayed(9), None, &NEIGHBORS, 5, out));
            for n in NEIGHBORS {
                assert!(
                    (freq[n as usize] - v0).abs() < 0.01,
                    "{keying:?} {n}: {}",
                    freq[n as usize]
                );
            }
        }
    }

    #[test]
    fn adaptive2_rates_follow_source() {
        let mut p = peer(0, Keying::Source, 0.2, 0.5);
        p.thresholds.apply_stimulus(ThresholdKey::Source(9), 0);
        let stimulated =
            frequencies(|out| adaptive2_forward(&mut p, &relayed(9), None, &NEIGHBORS, 0, out));
        let plain =
            frequencies(|out| adaptive2_forward(&mut p, &relayed(8), None, &NEIGHBORS, 0, out));
        for n in NEIGHBORS {
            assert!((stimulated[n as usize] - 0.7).abs() < 0.01);
            assert!((plain[n as usize] - 0.2).abs() < 0.01);
        }
    }

    #[test]
    fn adaptive2_local_event_uses_own_key() {
        let mut p = peer(5, Keying::Source, 0.01, 1.0);
        p.thresholds.apply_stimulus(ThresholdKey::Source(5), 0);
        let mut out = Vec::new();
        adaptive2_forward(
            &mut p,
            &Message::new(1, 5, 0, 8),
            None,
            &NEIGHBORS,
            0,
            &mut out,
        );
        assert_eq!(targets(&out), NEIGHBORS.to_vec());
    }

    #[test]
    fn adaptive3_is_selective() {
        let mut p = peer(0, Keying::SourceReceiver, 0.2, 0.5);
        p.thresholds
            .apply_stimulus(Keying::SourceReceiver.stimulus_key(1, 9), 0);
        let from_s =
            frequencies(|out| adaptive3_forward(&mut p, &relayed(9), None, &NEIGHBORS, 0, out));
        let from_other =
            frequencies(|out| adaptive3_forward(&mut p, &relayed(8), None, &NEIGHBORS, 0, out));
        assert!((from_s[1] - 0.7).abs() < 0.01);
        assert!((from_s[2] - 0.2).abs() < 0.01);
        assert!((from_other[1] - 0.2).abs() < 0.01);
    }

    #[test]
    fn adaptive3_saturates_at_one() {
        let mut p = peer(0, Keying::SourceReceiver, 0.6, 0.7);
        p.thresholds
            .apply_stimulus(Keying::SourceReceiver.stimulus_key(2, 9), 0);
        let freq =
            frequencies(|out| adaptive3_forward(&mut p, &relayed(9), None, &NEIGHBORS, 0, out));
        assert_eq!(freq[2], 1.0);
    }

    #[test]
    fn receiver_keyed_stimulus_raises_only_requester() {
        let policy = AdaptiveGossip {
            keying: Keying::Receiver,
            monitor: MonitorParams::uniform(16, 0.01, 1.0, 50),
        };
        let mut q = peer(3, Keying::Receiver, 0.2, 0.3);
        let stimulus = StimulusMessage {
            requester: 1,
            about_source: 9,
            issue_time: 40,
        };
        policy.on_stimulus(&mut q, &stimulus, 41);
        let raised = q
            .thresholds
            .compute_threshold(ThresholdKey::Receiver(1), 41);
        assert!((raised - 0.5).abs() < 1e-12);
        assert_eq!(
            q.thresholds
                .compute_threshold(ThresholdKey::Receiver(2), 41),
            0.2
        );
    }

    #[test]
    fn duplicates_are_dropped_before_forwarding() {
        let policy = FixedProbability { v0: 1.0 };
        let mut p = peer(0, Keying::Receiver, 1.0, 0.0);
        let mut out = Vec::new();
        let msg = relayed(9);
        assert_eq!(
            policy.on_receive(&mut p, &msg, 1, &NEIGHBORS, 0, &mut out),
            Verdict::FirstCopy
        );
        assert_eq!(out.len(), 3);
        assert_eq!(p.reception_stats.count(9), 1);
        out.clear();
        assert_eq!(
            policy.on_receive(&mut p, &msg, 2, &NEIGHBORS, 1, &mut out),
            Verdict::Duplicate
        );
        assert!(out.is_empty());
        assert_eq!(p.reception_stats.count(9), 1);
    }

    #[test]
    fn origin_ignores_its_own_echo() {
        let policy = FixedProbability { v0: 1.0 };
        let mut p = peer(0, Keying::Receiver, 1.0, 0.0);
        let msg = Message::new(4, 0, 0, 8);
        let mut out = Vec::new();
        policy.on_local_event(&mut p, &msg, &NEIGHBORS, 0, &mut out);
        assert_eq!(out.len(), 4);
        out.clear();
        let echo = msg.relayed().unwrap().relayed().unwrap();
        assert_eq!(
            policy.on_receive(&mut p, &echo, 1, &NEIGHBORS, 2, &mut out),
            Verdict::Duplicate
        );
    }

    #[test]
    fn identical_state_gives_identical_transmissions() {
        for kind in PolicyKind::ALL {
            let run = || {
                let mut p = peer(0, kind.keying().unwrap_or(Keying::Receiver), 0.4, 0.2);
                let mut out = Vec::new();
                for i in 0..200u64 {
                    let msg = Message {
                        id: i,
                        ..relayed((i % 7) as NodeId + 5)
                    };
                    match kind {
                        PolicyKind::FixedProbability => fixed_probability_forward(
                            &mut p,
                            &msg,
                            Some(1),
                            &NEIGHBORS,
                            0.4,
                            &mut out,
                        ),
                        PolicyKind::ProbabilisticBroadcast => probabilistic_broadcast_forward(
                            &mut p,
                            &msg,
                            Some(1),
                            &NEIGHBORS,
                            0.4,
                            &mut out,
                        ),
                        PolicyKind::Adaptive1 => {
                            adaptive1_forward(&mut p, &msg, Some(1), &NEIGHBORS, i, &mut out)
                        }
                        PolicyKind::Adaptive2 => {
                            adaptive2_forward(&mut p, &msg, Some(1), &NEIGHBORS, i, &mut out)
                        }
                        PolicyKind::Adaptive3 => {
                            adaptive3_forward(&mut p, &msg, Some(1), &NEIGHBORS, i, &mut out)
                        }
                    }
                }
                out
            };
            assert_eq!(run(), run(), "{kind}");
        }
    }
}
