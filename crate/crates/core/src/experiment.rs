//! Batch experiments: graph sets, parameter presets, seeded sweeps and the
//! result files they produce.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::{self, Curves};
use crate::metrics::{self, AggregateRow, DelayMode, MetricsError, MetricsReport};
use crate::protocol::PolicyKind;
use crate::rng::mix_seed;
use crate::sim::{self, ConfigError, SimConfig, Trace, DEFAULT_MEAN_INTERGEN};
use crate::stimulus::Step;
use crate::topology::{self, Graph, TopologyError};

pub const RESULTS_FILE: &str = "results.csv";
pub const AGGREGATED_FILE: &str = "aggregated.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const COVERAGE_CURVE_FILE: &str = "coverage_curve.csv";
pub const DELAY_CURVE_FILE: &str = "delay_curve.csv";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("graph {graph_id}: {source}")]
    Graph {
        graph_id: String,
        #[source]
        source: TopologyError,
    },
    #[error("run failed (graph {graph_id}, policy {policy}, v0 {v0}, replicate {replicate}, seed {run_seed}): {source}")]
    Run {
        graph_id: String,
        policy: PolicyKind,
        v0: f64,
        replicate: u32,
        run_seed: u64,
        #[source]
        source: ConfigError,
    },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ExperimentError {
    /// True when a graph set could not satisfy its connectivity/diameter bound.
    pub fn is_constraint_unsatisfiable(&self) -> bool {
        matches!(
            self,
            ExperimentError::Graph {
                source: TopologyError::ConstraintUnsatisfiable { .. },
                ..
            }
        )
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Monitoring and stimulus parameters of the adaptive policies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveParams {
    pub t_mon: Step,
    pub sigma: f64,
    pub delta: Step,
    pub alpha: f64,
}

impl AdaptiveParams {
    pub const fn new(t_mon: Step, sigma: f64, delta: Step, alpha: f64) -> Self {
        Self {
            t_mon,
            sigma,
            delta,
            alpha,
        }
    }
}

const ALG1_DEFAULT: AdaptiveParams = AdaptiveParams::new(100, 0.2, 300, 1.0 / 3.0);
const ALG2_DEFAULT: AdaptiveParams = AdaptiveParams::new(50, 0.5, 1000, 0.75);
const ALG3_DEFAULT: AdaptiveParams = AdaptiveParams::new(50, 0.7, 10_000, 1.0);

/// Named parameter sets. `table1` gives each adaptive policy its own row of
/// the adaptive-protocol comparison; the others apply one tuple to every policy.
pub const PRESETS: [(&str, AdaptiveParams); 9] = [
    ("alg1-paper", ALG1_DEFAULT),
    ("alg2-paper", ALG2_DEFAULT),
    ("alg3-paper", ALG3_DEFAULT),
    ("alg3-setup1", AdaptiveParams::new(50, 0.5, 1000, 1.0)),
    ("alg3-setup2", AdaptiveParams::new(50, 0.5, 5000, 1.0)),
    ("alg3-setup3", AdaptiveParams::new(50, 0.5, 1000, 0.75)),
    ("alg3-setup4", AdaptiveParams::new(50, 0.7, 10_000, 1.0)),
    ("alg3-setup5", AdaptiveParams::new(30, 0.25, 10_000, 1.0)),
    ("alg3-setup6", AdaptiveParams::new(30, 0.25, 10_000, 0.5)),
];

pub const TABLE1_PRESET: &str = "table1";

pub fn preset(name: &str) -> Option<AdaptiveParams> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|&(_, p)| p)
}

pub fn preset_names() -> Vec<&'static str> {
    PRESETS
        .iter()
        .map(|(n, _)| *n)
        .chain([TABLE1_PRESET])
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamSpec {
    Preset(String),
    Explicit(AdaptiveParams),
}

impl ParamSpec {
    pub fn resolve(&self, policy: PolicyKind) -> Result<AdaptiveParams, ExperimentError> {
        match self {
            ParamSpec::Explicit(p) => Ok(*p),
            ParamSpec::Preset(name) if name == TABLE1_PRESET => Ok(match policy {
                PolicyKind::Adaptive2 => ALG2_DEFAULT,
                PolicyKind::Adaptive3 => ALG3_DEFAULT,
                _ => ALG1_DEFAULT,
            }),
            ParamSpec::Preset(name) => {
                preset(name).ok_or_else(|| ExperimentError::UnknownPreset(name.clone()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum V0Spec {
    Single(f64),
    /// `k / K` for `k = 1..=K`.
    Sweep(u32),
}

impl V0Spec {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            V0Spec::Single(v) => vec![v],
            V0Spec::Sweep(k) => (1..=k).map(|i| f64::from(i) / f64::from(k)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateSpec {
    pub count: usize,
    pub n: usize,
    pub edges_per_node: usize,
    pub d_max: u32,
    pub seed: u64,
    pub max_attempts: u32,
}

impl Default for GenerateSpec {
    fn default() -> Self {
        Self {
            count: 20,
            n: 100,
            edges_per_node: 2,
            d_max: 8,
            seed: 1,
            max_attempts: 1000,
        }
    }
}

impl GenerateSpec {
    /// Parses `gen:count=20,n=100,edges-per-node=2,d-max=8,seed=1`; omitted
    /// keys keep their defaults.
    pub fn parse(spec: &str) -> Result<Self, ExperimentError> {
        let body = spec
            .strip_prefix("gen:")
            .or_else(|| (spec == "gen").then_some(""))
            .ok_or_else(|| {
                ExperimentError::InvalidPlan(format!("not a generator spec: {spec:?}"))
            })?;
        let mut out = GenerateSpec::default();
        for pair in body.split(',').filter(|p| !p.is_empty()) {
            let (key, value) = pair.split_once('=').ok_or_else(|| {
                ExperimentError::InvalidPlan(format!("expected key=value, got {pair:?}"))
            })?;
            let bad = || ExperimentError::InvalidPlan(format!("bad value for {key}: {value:?}"));
            match key.trim() {
                "count" => out.count = value.parse().map_err(|_| bad())?,
                "n" => out.n = value.parse().map_err(|_| bad())?,
                "edges-per-node" | "e" => out.edges_per_node = value.parse().map_err(|_| bad())?,
                "d-max" | "d" => out.d_max = value.parse().map_err(|_| bad())?,
                "seed" => out.seed = value.parse().map_err(|_| bad())?,
                "max-attempts" => out.max_attempts = value.parse().map_err(|_| bad())?,
                other => {
                    return Err(ExperimentError::InvalidPlan(format!(
                        "unknown generator key {other:?}"
                    )))
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphSource {
    Generate(GenerateSpec),
    Directory(PathBuf),
}

/// Generates `spec.count` overlays named `g000`, `g001`, ...
pub fn generate_graph_set(spec: &GenerateSpec) -> Result<Vec<Graph>, ExperimentError> {
    (0..spec.count)
        .map(|i| {
            let graph_id = format!("g{i:03}");
            let seed = mix_seed(&[spec.seed, i as u64]);
            topology::generate_overlay(
                spec.n,
                spec.edges_per_node,
                spec.d_max,
                seed,
                spec.max_attempts,
            )
            .map(|g| g.with_id(graph_id.clone()))
            .map_err(|source| ExperimentError::Graph { graph_id, source })
        })
        .collect()
}

/// Loads every `*.dot` file in `dir`, in file-name order; the file stem
/// becomes the graph id.
pub fn load_graph_dir(dir: &Path) -> Result<Vec<Graph>, ExperimentError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "dot"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(ExperimentError::InvalidPlan(format!(
            "no .dot files in {}",
            dir.display()
        )));
    }
    paths
        .iter()
        .map(|path| {
            let graph_id = path
                .file_stem()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned();
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            topology::import_dot(&text)
                .map(|g| g.with_id(graph_id.clone()))
                .map_err(|source| ExperimentError::Graph { graph_id, source })
        })
        .collect()
}

/// Writes each graph as `<graph_id>.dot` under `dir`.
pub fn write_graph_dir(dir: &Path, graphs: &[Graph]) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for g in graphs {
        let path = dir.join(format!("{}.dot", g.graph_id));
        fs::write(&path, topology::export_dot(g)).map_err(io_err(&path))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub graphs: GraphSource,
    pub policies: Vec<PolicyKind>,
    pub v0: V0Spec,
    pub params: ParamSpec,
    pub seeds: u32,
    pub master_seed: u64,
    pub steps: Step,
    pub ttl: u32,
    pub cache: usize,
    pub mean_intergen: f64,
    #[serde(default)]
    pub delay_mode: DelayMode,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            graphs: GraphSource::Generate(GenerateSpec::default()),
            policies: PolicyKind::ALL.to_vec(),
            v0: V0Spec::Sweep(25),
            params: ParamSpec::Preset(TABLE1_PRESET.into()),
            seeds: 3,
            master_seed: 1,
            steps: 5000,
            ttl: 8,
            cache: 256,
            mean_intergen: DEFAULT_MEAN_INTERGEN,
            delay_mode: DelayMode::Pooled,
        }
    }
}

/// One simulation of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub policy: PolicyKind,
    pub graph_index: usize,
    pub graph_id: String,
    pub v0_index: usize,
    pub v0: f64,
    pub replicate: u32,
    pub run_seed: u64,
}

pub fn derive_run_seed(
    master: u64,
    graph_index: usize,
    policy: PolicyKind,
    v0_index: usize,
    replicate: u32,
) -> u64 {
    let policy_index = PolicyKind::ALL
        .iter()
        .position(|&p| p == policy)
        .unwrap_or(0);
    mix_seed(&[
        master,
        graph_index as u64,
        policy_index as u64,
        v0_index as u64,
        u64::from(replicate),
    ])
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::InvalidPlan(m.into()));
        if self.policies.is_empty() {
            return bad("at least one policy is required");
        }
        if self.seeds == 0 {
            return bad("seeds must be >= 1");
        }
        match self.v0 {
            V0Spec::Sweep(0) => return bad("sweep needs K >= 1"),
            V0Spec::Single(v) if !(v > 0.0 && v <= 1.0) => return bad("v0 must lie in (0, 1]"),
            _ => {}
        }
        for &p in &self.policies {
            self.params.resolve(p)?;
        }
        Ok(())
    }

    pub fn load_graphs(&self) -> Result<Vec<Graph>, ExperimentError> {
        match &self.graphs {
            GraphSource::Generate(spec) => generate_graph_set(spec),
            GraphSource::Directory(dir) => load_graph_dir(dir),
        }
    }

    /// All runs in output order: policy, then v0, then graph, then replicate.
    pub fn runs(&self, graphs: &[Graph]) -> Vec<RunSpec> {
        let v0s = self.v0.values();
        let mut runs = Vec::with_capacity(
            self.policies.len() * v0s.len() * graphs.len() * self.seeds as usize,
        );
        for &policy in &self.policies {
            for (v0_index, &v0) in v0s.iter().enumerate() {
                for (graph_index, g) in graphs.iter().enumerate() {
                    for replicate in 0..self.seeds {
                        runs.push(RunSpec {
                            policy,
                            graph_index,
                            graph_id: g.graph_id.clone(),
                            v0_index,
                            v0,
                            replicate,
                            run_seed: derive_run_seed(
                                self.master_seed,
                                graph_index,
                                policy,
                                v0_index,
                                replicate,
                            ),
                        });
                    }
                }
            }
        }
        runs
    }

    pub fn sim_config(&self, run: &RunSpec, n: usize) -> Result<SimConfig, ExperimentError> {
        let params = self.params.resolve(run.policy)?;
        Ok(SimConfig {
            steps: self.steps,
            n,
            edges_per_node: match &self.graphs {
                GraphSource::Generate(spec) => spec.edges_per_node,
                GraphSource::Directory(_) => 0,
            },
            ttl_init: self.ttl,
            cache_capacity: self.cache,
            mean_intergen: self.mean_intergen,
            policy: run.policy,
            v0: run.v0,
            sigma: params.sigma,
            delta: params.delta,
            alpha: params.alpha,
            t_mon: params.t_mon,
            run_seed: run.run_seed,
        })
    }
}

/// Graph summary recorded in a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphRecord {
    pub graph_id: String,
    pub gen_seed: u64,
    pub n: usize,
    pub edges: usize,
    pub diameter: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub plan: ExperimentPlan,
    pub graphs: Vec<GraphRecord>,
    pub runs: Vec<RunSpec>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub manifest: Manifest,
    pub reports: Vec<MetricsReport>,
    pub aggregated: Vec<AggregateRow>,
}

fn run_one(
    plan: &ExperimentPlan,
    graphs: &[Graph],
    run: &RunSpec,
) -> Result<(SimConfig, Trace), ExperimentError> {
    let g = &graphs[run.graph_index];
    let config = plan.sim_config(run, g.node_count())?;
    let trace = sim::run(&config, g).map_err(|source| ExperimentError::Run {
        graph_id: run.graph_id.clone(),
        policy: run.policy,
        v0: run.v0,
        replicate: run.replicate,
        run_seed: run.run_seed,
        source,
    })?;
    Ok((config, trace))
}

fn prepare(plan: &ExperimentPlan) -> Result<(Vec<Graph>, Manifest), ExperimentError> {
    plan.validate()?;
    let graphs = plan.load_graphs()?;
    let records = graphs
        .iter()
        .map(|g| {
            let diameter = topology::diameter(g).map_err(|source| ExperimentError::Graph {
                graph_id: g.graph_id.clone(),
                source,
            })?;
            Ok(GraphRecord {
                graph_id: g.graph_id.clone(),
                gen_seed: g.gen_seed,
                n: g.node_count(),
                edges: g.edge_count(),
                diameter,
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let runs = plan.runs(&graphs);
    // Reject bad configurations before any simulation starts.
    for run in &runs {
        let g = &graphs[run.graph_index];
        let config = plan.sim_config(run, g.node_count())?;
        let fail = |source| ExperimentError::Run {
            graph_id: run.graph_id.clone(),
            policy: run.policy,
            v0: run.v0,
            replicate: run.replicate,
            run_seed: run.run_seed,
            source,
        };
        config.validate().map_err(fail)?;
        let diameter = records[run.graph_index].diameter;
        if config.ttl_init < diameter {
            return Err(fail(ConfigError::TtlBelowDiameter {
                ttl: config.ttl_init,
                diameter,
            }));
        }
    }
    let manifest = Manifest {
        plan: plan.clone(),
        graphs: records,
        runs,
    };
    Ok((graphs, manifest))
}

/// Runs every simulation of the plan on a pool of `jobs` workers (0 means
/// one per core). Output order and content do not depend on `jobs`.
pub fn run_experiment(
    plan: &ExperimentPlan,
    jobs: usize,
) -> Result<ExperimentOutput, ExperimentError> {
    let (graphs, manifest) = prepare(plan)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| ExperimentError::InvalidPlan(format!("worker pool: {e}")))?;
    let reports = pool.install(|| {
        manifest
            .runs
            .par_iter()
            .map(|run| {
                let (config, trace) = run_one(plan, &graphs, run)?;
                Ok(MetricsReport::from_trace(
                    &trace,
                    &config,
                    &run.graph_id,
                    plan.delay_mode,
                ))
            })
            .collect::<Result<Vec<_>, ExperimentError>>()
    })?;
    let aggregated = metrics::aggregate(&reports)?;
    Ok(ExperimentOutput {
        manifest,
        reports,
        aggregated,
    })
}

/// Simulates a single run of a plan and returns its trace.
pub fn replay_trace(plan: &ExperimentPlan, run_index: usize) -> Result<Trace, ExperimentError> {
    let (graphs, manifest) = prepare(plan)?;
    let run = manifest.runs.get(run_index).ok_or_else(|| {
        ExperimentError::InvalidPlan(format!("run index {run_index} out of range"))
    })?;
    run_one(plan, &graphs, run).map(|(_, trace)| trace)
}

fn write_csv<T: Serialize>(
    path: &Path,
    rows: &[T],
    header: &[&str],
) -> Result<(), ExperimentError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub const RESULTS_HEADER: [&str; 15] = [
    "policy",
    "graph_id",
    "run_seed",
    "v0",
    "sigma",
    "delta",
    "alpha",
    "t_mon",
    "n",
    "m",
    "coverage",
    "delay",
    "rho",
    "data_tx",
    "control_tx",
];

pub const AGGREGATED_HEADER: [&str; 19] = [
    "policy",
    "graph_id",
    "run_seed",
    "v0",
    "sigma",
    "delta",
    "alpha",
    "t_mon",
    "n",
    "m",
    "coverage",
    "delay",
    "rho",
    "data_tx",
    "control_tx",
    "coverage_sd",
    "delay_sd",
    "rho_sd",
    "runs",
];

impl ExperimentOutput {
    /// Writes `results.csv`, `aggregated.csv` and `manifest.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), ExperimentError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        write_csv(&dir.join(RESULTS_FILE), &self.reports, &RESULTS_HEADER)?;
        write_csv(
            &dir.join(AGGREGATED_FILE),
            &self.aggregated,
            &AGGREGATED_HEADER,
        )?;
        let manifest_path = dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(&self.manifest)?;
        fs::write(&manifest_path, json + "\n").map_err(io_err(&manifest_path))?;
        Ok(())
    }
}

pub fn read_manifest(path: &Path) -> Result<Manifest, ExperimentError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_results(path: &Path) -> Result<Vec<MetricsReport>, ExperimentError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

pub fn read_aggregated(path: &Path) -> Result<Vec<AggregateRow>, ExperimentError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

fn write_curve(
    path: &Path,
    value: &str,
    points: &[curves::CurvePoint],
) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path)?;
    let sd = format!("{value}_sd");
    w.write_record([
        "policy",
        "sigma",
        "delta",
        "alpha",
        "t_mon",
        "rho",
        value,
        sd.as_str(),
    ])?;
    for p in points {
        w.write_record([
            p.policy.name().to_string(),
            p.sigma.to_string(),
            p.delta.to_string(),
            p.alpha.to_string(),
            p.t_mon.to_string(),
            p.rho.to_string(),
            p.value.to_string(),
            p.sd.to_string(),
        ])?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Writes `coverage_curve.csv` and `delay_curve.csv` into `dir`.
pub fn write_curves(dir: &Path, curves: &Curves) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_curve(&dir.join(COVERAGE_CURVE_FILE), "coverage", &curves.coverage)?;
    write_curve(&dir.join(DELAY_CURVE_FILE), "delay", &curves.delay)?;
    Ok(())
}
