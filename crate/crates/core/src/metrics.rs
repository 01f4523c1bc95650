//! Coverage, delay and overhead ratio of a trace, plus cross-run aggregation.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::PolicyKind;
use crate::sim::{SimConfig, Trace};
use crate::stimulus::Step;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("nothing to aggregate")]
    Empty,
    #[error("group {policy} v0={v0} mixes node counts {first} and {other}")]
    MixedNodeCount {
        policy: PolicyKind,
        v0: f64,
        first: usize,
        other: usize,
    },
}

fn receivers_per_message(trace: &Trace) -> HashMap<u64, u64> {
    let mut counts = HashMap::with_capacity(trace.generated.len());
    for r in &trace.first_receptions {
        *counts.entry(r.msg_id).or_insert(0) += 1;
    }
    counts
}

/// Mean over the selected messages of `receivers / (n - 1)`; the source is
/// not counted. `None` when no message is selected.
pub fn coverage_where(trace: &Trace, n: usize, mut keep: impl FnMut(Step) -> bool) -> Option<f64> {
    assert!(n >= 2, "coverage needs at least two nodes");
    let counts = receivers_per_message(trace);
    let others = (n - 1) as f64;
    let (sum, m) =
        trace
            .generated
            .iter()
            .filter(|g| keep(g.time))
            .fold((0.0, 0usize), |(sum, m), g| {
                let received = counts.get(&g.msg_id).copied().unwrap_or(0) as f64;
                (sum + received / others, m + 1)
            });
    (m > 0).then(|| sum / m as f64)
}

pub fn coverage(trace: &Trace, n: usize) -> Option<f64> {
    coverage_where(trace, n, |_| true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DelayMode {
    /// One mean over every first-reception record.
    #[default]
    Pooled,
    /// Mean per message first, then mean over messages.
    TwoStage,
}

pub fn delay(trace: &Trace) -> Option<f64> {
    let hops = &trace.first_receptions;
    (!hops.is_empty())
        .then(|| hops.iter().map(|r| f64::from(r.hops)).sum::<f64>() / hops.len() as f64)
}

pub fn delay_two_stage(trace: &Trace) -> Option<f64> {
    let mut per_msg: BTreeMap<u64, (f64, u32)> = BTreeMap::new();
    for r in &trace.first_receptions {
        let e = per_msg.entry(r.msg_id).or_insert((0.0, 0));
        e.0 += f64::from(r.hops);
        e.1 += 1;
    }
    (!per_msg.is_empty()).then(|| {
        per_msg
            .values()
            .map(|&(s, c)| s / f64::from(c))
            .sum::<f64>()
            / per_msg.len() as f64
    })
}

pub fn delay_with(trace: &Trace, mode: DelayMode) -> Option<f64> {
    match mode {
        DelayMode::Pooled => delay(trace),
        DelayMode::TwoStage => delay_two_stage(trace),
    }
}

/// Data transmissions over the spanning-tree lower bound `(n - 1) * m`.
pub fn overhead_ratio(trace: &Trace, n: usize) -> Option<f64> {
    let m = trace.generated.len();
    (m > 0 && n >= 2).then(|| trace.data_tx as f64 / ((n - 1) as f64 * m as f64))
}

/// One row of the per-run results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub policy: PolicyKind,
    pub graph_id: String,
    pub run_seed: u64,
    pub v0: f64,
    pub sigma: f64,
    pub delta: Step,
    pub alpha: f64,
    pub t_mon: Step,
    pub n: usize,
    pub m: u64,
    pub coverage: Option<f64>,
    pub delay: Option<f64>,
    pub rho: Option<f64>,
    pub data_tx: u64,
    pub control_tx: u64,
}

impl MetricsReport {
    pub fn from_trace(trace: &Trace, config: &SimConfig, graph_id: &str, mode: DelayMode) -> Self {
        Self {
            policy: config.policy,
            graph_id: graph_id.to_string(),
            run_seed: config.run_seed,
            v0: config.v0,
            sigma: config.sigma,
            delta: config.delta,
            alpha: config.alpha,
            t_mon: config.t_mon,
            n: config.n,
            m: trace.generated.len() as u64,
            coverage: coverage(trace, config.n),
            delay: delay_with(trace, mode),
            rho: overhead_ratio(trace, config.n),
            data_tx: trace.data_tx,
            control_tx: trace.control_tx,
        }
    }
}

/// One row of the aggregated results file: means over a parameter group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub policy: PolicyKind,
    pub graph_id: String,
    pub run_seed: String,
    pub v0: f64,
    pub sigma: f64,
    pub delta: Step,
    pub alpha: f64,
    pub t_mon: Step,
    pub n: usize,
    pub m: f64,
    pub coverage: Option<f64>,
    pub delay: Option<f64>,
    pub rho: Option<f64>,
    pub data_tx: f64,
    pub control_tx: f64,
    pub coverage_sd: Option<f64>,
    pub delay_sd: Option<f64>,
    pub rho_sd: Option<f64>,
    pub runs: usize,
}

/// Mean and sample standard deviation of the present values.
pub fn mean_sd(values: impl IntoIterator<Item = Option<f64>>) -> Option<(f64, f64)> {
    let xs: Vec<f64> = values.into_iter().flatten().collect();
    if xs.is_empty() {
        return None;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let sd = if xs.len() < 2 {
        0.0
    } else {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
    };
    Some((mean, sd))
}

type GroupKey = (PolicyKind, u64, u64, Step, u64, Step);

fn group_key(r: &MetricsReport) -> GroupKey {
    (
        r.policy,
        r.v0.to_bits(),
        r.sigma.to_bits(),
        r.delta,
        r.alpha.to_bits(),
        r.t_mon,
    )
}

/// Groups runs by policy and full parameter tuple, then reports means and
/// sample standard deviations. Within a group, runs are summed in
/// `(graph_id, run_seed)` order so the result does not depend on input
/// order. Rows come back sorted by mean overhead ratio.
pub fn aggregate(reports: &[MetricsReport]) -> Result<Vec<AggregateRow>, MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut groups: BTreeMap<GroupKey, Vec<&MetricsReport>> = BTreeMap::new();
    for r in reports {
        groups.entry(group_key(r)).or_default().push(r);
    }
    let mut rows = Vec::with_capacity(groups.len());
    for (_, mut runs) in groups {
        runs.sort_by(|a, b| (&a.graph_id, a.run_seed).cmp(&(&b.graph_id, b.run_seed)));
        let first = runs[0];
        if let Some(other) = runs.iter().find(|r| r.n != first.n) {
            return Err(MetricsError::MixedNodeCount {
                policy: first.policy,
                v0: first.v0,
                first: first.n,
                other: other.n,
            });
        }
        let count = runs.len() as f64;
        let coverage = mean_sd(runs.iter().map(|r| r.coverage));
        let delay = mean_sd(runs.iter().map(|r| r.delay));
        let rho = mean_sd(runs.iter().map(|r| r.rho));
        rows.push(AggregateRow {
            policy: first.policy,
            graph_id: "*".into(),
            run_seed: "*".into(),
            v0: first.v0,
            sigma: first.sigma,
            delta: first.delta,
            alpha: first.alpha,
            t_mon: first.t_mon,
            n: first.n,
            m: runs.iter().map(|r| r.m as f64).sum::<f64>() / count,
            coverage: coverage.map(|c| c.0),
            delay: delay.map(|d| d.0),
            rho: rho.map(|r| r.0),
            data_tx: runs.iter().map(|r| r.data_tx as f64).sum::<f64>() / count,
            control_tx: runs.iter().map(|r| r.control_tx as f64).sum::<f64>() / count,
            coverage_sd: coverage.map(|c| c.1),
            delay_sd: delay.map(|d| d.1),
            rho_sd: rho.map(|r| r.1),
            runs: runs.len(),
        });
    }
    // Stable sort keeps the group order for equal overhead ratios.
    rows.sort_by(|a, b| {
        a.rho
            .unwrap_or(f64::INFINITY)
            .total_cmp(&b.rho.unwrap_or(f64::INFINITY))
    });
    Ok(rows)
}
