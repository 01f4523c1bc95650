//! Time-stepped discrete-event core for a single run.
//!
//! Every transmission, data or stimulus, takes exactly one step. Events that
//! share a step fire in kind order (deliveries, stimulus deliveries,
//! generations, monitor ticks) and then in scheduling order, so a run is a
//! pure function of its configuration and graph.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::monitoring::{MonitorParams, StimulusMessage};
use crate::protocol::{
    AdaptiveGossip, DisseminationPolicy, FixedProbability, Message, PeerState, PolicyKind,
    ProbabilisticBroadcast, Transmission, Verdict,
};
use crate::rng::{self, Purpose};
use crate::stimulus::{Keying, Step, ThresholdParams};
use crate::topology::{self, Graph, NodeId};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("ttl {ttl} is below the graph diameter {diameter}")]
    TtlBelowDiameter { ttl: u32, diameter: u32 },
    #[error("configuration expects {expected} nodes but the graph has {actual}")]
    NodeCountMismatch { expected: usize, actual: usize },
    #[error(transparent)]
    Topology(#[from] topology::TopologyError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub steps: Step,
    pub n: usize,
    pub edges_per_node: usize,
    pub ttl_init: u32,
    pub cache_capacity: usize,
    /// Mean inter-generation time in steps; the expected rate is its inverse.
    pub mean_intergen: f64,
    pub policy: PolicyKind,
    pub v0: f64,
    pub sigma: f64,
    pub delta: Step,
    pub alpha: f64,
    pub t_mon: Step,
    pub run_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            steps: 5000,
            n: 100,
            edges_per_node: 2,
            ttl_init: 8,
            cache_capacity: 256,
            mean_intergen: DEFAULT_MEAN_INTERGEN,
            policy: PolicyKind::FixedProbability,
            v0: 1.0,
            sigma: 0.2,
            delta: 300,
            alpha: 1.0 / 3.0,
            t_mon: 100,
            run_seed: 0,
        }
    }
}

pub const DEFAULT_MEAN_INTERGEN: f64 = 200.0;

impl SimConfig {
    pub fn generation_rate(&self) -> f64 {
        1.0 / self.mean_intergen
    }

    /// Checks the parameter ranges that do not depend on a graph.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if self.steps < 1 {
            return bad("steps must be >= 1".into());
        }
        if !(self.v0 > 0.0 && self.v0 <= 1.0) {
            return bad(format!("v0 must lie in (0, 1], got {}", self.v0));
        }
        if self.alpha.is_nan() || self.alpha < 0.0 {
            return bad(format!("alpha must be >= 0, got {}", self.alpha));
        }
        if self.sigma.is_nan() || self.sigma < 0.0 {
            return bad(format!("sigma must be >= 0, got {}", self.sigma));
        }
        if self.t_mon < 1 {
            return bad("t_mon must be >= 1".into());
        }
        if !(self.mean_intergen > 0.0 && self.mean_intergen.is_finite()) {
            return bad(format!(
                "mean_intergen must be positive, got {}",
                self.mean_intergen
            ));
        }
        if self.cache_capacity < 1 {
            return bad("cache capacity must be >= 1".into());
        }
        Ok(())
    }

    /// Full validation against the graph the run will use.
    pub fn validate_for(&self, g: &Graph) -> Result<(), ConfigError> {
        self.validate()?;
        if g.node_count() != self.n {
            return Err(ConfigError::NodeCountMismatch {
                expected: self.n,
                actual: g.node_count(),
            });
        }
        let diameter = topology::diameter(g)?;
        if self.ttl_init < diameter {
            return Err(ConfigError::TtlBelowDiameter {
                ttl: self.ttl_init,
                diameter,
            });
        }
        Ok(())
    }

    pub fn build_policy(&self) -> Box<dyn DisseminationPolicy> {
        match self.policy {
            PolicyKind::FixedProbability => Box::new(FixedProbability { v0: self.v0 }),
            PolicyKind::ProbabilisticBroadcast => Box::new(ProbabilisticBroadcast { v0: self.v0 }),
            kind => Box::new(AdaptiveGossip {
                keying: kind.keying().expect("adaptive policy"),
                monitor: MonitorParams::uniform(
                    self.n,
                    self.generation_rate(),
                    self.alpha,
                    self.t_mon,
                ),
            }),
        }
    }

    fn threshold_params(&self) -> ThresholdParams {
        ThresholdParams {
            base: self.v0,
            sigma: self.sigma,
            delta: self.delta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Generated {
    pub msg_id: u64,
    pub source: NodeId,
    pub time: Step,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FirstReception {
    pub msg_id: u64,
    pub source: NodeId,
    pub receiver: NodeId,
    pub hops: u32,
    pub time: Step,
}

/// Everything the metrics need from one run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub generated: Vec<Generated>,
    pub first_receptions: Vec<FirstReception>,
    pub data_tx: u64,
    pub control_tx: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("trace line {line}: {message}")]
pub struct TraceParseError {
    pub line: usize,
    pub message: String,
}

impl Trace {
    /// Line format: `G,msg_id,source,time`, then
    /// `R,msg_id,source,receiver,hops,time`, then the `S,data_tx,control_tx` footer.
    pub fn to_text(&self) -> String {
        let mut out =
            String::with_capacity(24 * (self.generated.len() + self.first_receptions.len()) + 32);
        for g in &self.generated {
            let _ = writeln!(out, "G,{},{},{}", g.msg_id, g.source, g.time);
        }
        for r in &self.first_receptions {
            let _ = writeln!(
                out,
                "R,{},{},{},{},{}",
                r.msg_id, r.source, r.receiver, r.hops, r.time
            );
        }
        let _ = writeln!(out, "S,{},{}", self.data_tx, self.control_tx);
        out
    }

    pub fn parse(text: &str) -> Result<Trace, TraceParseError> {
        let mut trace = Trace::default();
        let mut footer = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let err = |message: String| TraceParseError { line, message };
            if raw.trim().is_empty() {
                continue;
            }
            if footer {
                return Err(err("record after footer".into()));
            }
            let fields: Vec<&str> = raw.split(',').collect();
            let num = |i: usize| -> Result<u64, TraceParseError> {
                fields
                    .get(i)
                    .ok_or_else(|| err(format!("missing field {i}")))?
                    .parse()
                    .map_err(|e| err(format!("field {i}: {e}")))
            };
            let expect_len = |n: usize| {
                if fields.len() == n {
                    Ok(())
                } else {
                    Err(err(format!("expected {n} fields, got {}", fields.len())))
                }
            };
            match fields[0] {
                "G" => {
                    expect_len(4)?;
                    trace.generated.push(Generated {
                        msg_id: num(1)?,
                        source: num(2)? as NodeId,
                        time: num(3)?,
                    });
                }
                "R" => {
                    expect_len(6)?;
                    trace.first_receptions.push(FirstReception {
                        msg_id: num(1)?,
                        source: num(2)? as NodeId,
                        receiver: num(3)? as NodeId,
                        hops: num(4)? as u32,
                        time: num(5)?,
                    });
                }
                "S" => {
                    expect_len(3)?;
                    trace.data_tx = num(1)?;
                    trace.control_tx = num(2)?;
                    footer = true;
                }
                other => return Err(err(format!("unknown record kind {other:?}"))),
            }
        }
        if !footer {
            return Err(TraceParseError {
                line: text.lines().count(),
                message: "missing S footer".into(),
            });
        }
        Ok(trace)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Event {
    Deliver {
        msg: Message,
        from: NodeId,
        to: NodeId,
    },
    DeliverStimulus {
        stimulus: StimulusMessage,
        to: NodeId,
    },
    Generate(NodeId),
    MonitorTick(NodeId),
}

impl Event {
    fn priority(&self) -> u8 {
        match self {
            Event::Deliver { .. } => 0,
            Event::DeliverStimulus { .. } => 1,
            Event::Generate(_) => 2,
            Event::MonitorTick(_) => 3,
        }
    }
}

/// Calendar queue with one bucket per step and one lane per event kind.
/// Every push lands strictly after the step being drained, so popping lanes
/// in order yields `(time, kind, insertion order)`.
struct EventQueue {
    buckets: Vec<[Vec<Event>; 4]>,
    horizon: Step,
    time: Step,
    lane: usize,
    index: usize,
}

impl EventQueue {
    fn new(horizon: Step) -> Self {
        Self {
            buckets: (0..=horizon).map(|_| Default::default()).collect(),
            horizon,
            time: 0,
            lane: 0,
            index: 0,
        }
    }

    fn push(&mut self, fire_time: Step, event: Event) {
        if fire_time > self.horizon {
            return;
        }
        debug_assert!(
            fire_time > self.time || (fire_time == self.time && self.lane == 0 && self.index == 0)
        );
        self.buckets[fire_time as usize][event.priority() as usize].push(event);
    }

    fn pop(&mut self) -> Option<(Step, Event)> {
        while self.time <= self.horizon {
            let bucket = &mut self.buckets[self.time as usize];
            while self.lane < 4 {
                if let Some(&event) = bucket[self.lane].get(self.index) {
                    self.index += 1;
                    return Some((self.time, event));
                }
                self.lane += 1;
                self.index = 0;
            }
            *bucket = Default::default();
            self.time += 1;
            self.lane = 0;
        }
        None
    }
}

/// Step count between generations for a raw exponential sample.
pub fn generation_interval(sample: f64) -> Step {
    (sample.round() as Step).max(1)
}

/// Next generation time: `t + max(1, round(X))`, `X ~ Exp(mean = mean_intergen)`.
pub fn schedule_next_generation<R: Rng + ?Sized>(t: Step, mean_intergen: f64, rng: &mut R) -> Step {
    let exp = Exp::new(1.0 / mean_intergen).expect("positive rate");
    t + generation_interval(exp.sample(rng))
}

/// Executes one run. Events fire at steps `0..=steps`; nodes generate
/// events only at steps `< steps`, and copies that would arrive after the
/// last step are counted as sent but never delivered.
pub fn run(config: &SimConfig, g: &Graph) -> Result<Trace, ConfigError> {
    config.validate_for(g)?;
    Ok(run_unchecked(config, g))
}

fn run_unchecked(config: &SimConfig, g: &Graph) -> Trace {
    let n = g.node_count();
    let policy = config.build_policy();
    let keying = config.policy.keying().unwrap_or(Keying::Receiver);
    let mut peers: Vec<PeerState> = (0..n as NodeId)
        .map(|id| {
            PeerState::new(
                id,
                n,
                config.cache_capacity,
                keying,
                config.threshold_params(),
                config.run_seed,
            )
        })
        .collect();
    let mut gen_rngs: Vec<_> = (0..n as NodeId)
        .map(|id| rng::stream(config.run_seed, id, Purpose::Generation))
        .collect();

    let mut queue = EventQueue::new(config.steps);
    for node in 0..n as NodeId {
        let first = schedule_next_generation(0, config.mean_intergen, &mut gen_rngs[node as usize]);
        if first < config.steps {
            queue.push(first, Event::Generate(node));
        }
    }
    if let Some(period) = policy.monitoring_period() {
        for node in 0..n as NodeId {
            queue.push(period, Event::MonitorTick(node));
        }
    }

    let mut trace = Trace::default();
    let mut next_msg_id = 0u64;
    let mut out = Vec::new();

    while let Some((t, event)) = queue.pop() {
        out.clear();
        match event {
            Event::Deliver { msg, from, to } => {
                let peer = &mut peers[to as usize];
                let verdict = policy.on_receive(peer, &msg, from, g.neighbors(to), t, &mut out);
                if verdict == Verdict::FirstCopy {
                    trace.first_receptions.push(FirstReception {
                        msg_id: msg.id,
                        source: msg.source,
                        receiver: to,
                        hops: config.ttl_init - msg.ttl,
                        time: t,
                    });
                }
                dispatch(&mut queue, &mut trace, to, t, &out);
            }
            Event::DeliverStimulus { stimulus, to } => {
                policy.on_stimulus(&mut peers[to as usize], &stimulus, t);
            }
            Event::Generate(node) => {
                let msg = Message::new(next_msg_id, node, t, config.ttl_init);
                next_msg_id += 1;
                trace.generated.push(Generated {
                    msg_id: msg.id,
                    source: node,
                    time: t,
                });
                policy.on_local_event(
                    &mut peers[node as usize],
                    &msg,
                    g.neighbors(node),
                    t,
                    &mut out,
                );
                dispatch(&mut queue, &mut trace, node, t, &out);
                let next =
                    schedule_next_generation(t, config.mean_intergen, &mut gen_rngs[node as usize]);
                if next < config.steps {
                    queue.push(next, Event::Generate(node));
                }
            }
            Event::MonitorTick(node) => {
                policy.on_monitor_tick(&mut peers[node as usize], g.neighbors(node), t, &mut out);
                dispatch(&mut queue, &mut trace, node, t, &out);
                if let Some(period) = policy.monitoring_period() {
                    queue.push(t + period, Event::MonitorTick(node));
                }
            }
        }
    }
    trace
}

fn dispatch(
    queue: &mut EventQueue,
    trace: &mut Trace,
    sender: NodeId,
    t: Step,
    out: &[Transmission],
) {
    for tx in out {
        match *tx {
            Transmission::Data { to, msg } => {
                trace.data_tx += 1;
                queue.push(
                    t + 1,
                    Event::Deliver {
                        msg,
                        from: sender,
                        to,
                    },
                );
            }
            Transmission::Stimulus { to, stimulus } => {
                trace.control_tx += 1;
                queue.push(t + 1, Event::DeliverStimulus { stimulus, to });
            }
        }
    }
}
