//! `adgossip` command-line front end.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 when a run fails, 3 when
//! a graph set cannot satisfy its connectivity/diameter constraint.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adgossip::experiment::{
    self, AdaptiveParams, ExperimentError, ExperimentPlan, GenerateSpec, GraphSource, ParamSpec,
    V0Spec,
};
use adgossip::metrics::DelayMode;
use adgossip::sim::DEFAULT_MEAN_INTERGEN;
use adgossip::PolicyKind;
use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "adgossip",
    version,
    about = "Adaptive gossip simulator and experiment harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a set of random overlays and write them as DOT files.
    GenGraphs(GenGraphsArgs),
    /// Run a sweep and write results, aggregates, curves and a manifest.
    Run(RunArgs),
    /// Re-simulate one run of a manifest and print its trace.
    Trace(TraceArgs),
    /// Turn aggregated.csv into coverage and delay curve tables.
    Curves(CurvesArgs),
    /// List the parameter presets.
    Presets,
}

#[derive(Debug, Args)]
struct GenGraphsArgs {
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    edges_per_node: usize,
    #[arg(long, default_value_t = 8)]
    d_max: u32,
    #[arg(long, default_value_t = 20)]
    count: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    max_attempts: u32,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DelayArg {
    Pooled,
    TwoStage,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Replay the plan stored in a manifest; sweep flags are then ignored.
    #[arg(long, conflicts_with_all = ["graphs", "policies", "preset", "v0", "sweep_v0"])]
    manifest: Option<PathBuf>,
    /// Directory of .dot files, or `gen:count=20,n=100,edges-per-node=2,d-max=8,seed=1`.
    #[arg(long, default_value = "gen")]
    graphs: String,
    /// Comma-separated policy names.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "fixed-prob,prob-bcast,adaptive1,adaptive2,adaptive3"
    )]
    policies: Vec<PolicyKind>,
    /// Named parameter set; see `adgossip presets`.
    #[arg(long, conflicts_with_all = ["sigma", "delta", "alpha", "t_mon"])]
    preset: Option<String>,
    #[arg(long, requires_all = ["delta", "alpha", "t_mon"])]
    sigma: Option<f64>,
    #[arg(long)]
    delta: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    t_mon: Option<u64>,
    /// Single base probability instead of a sweep.
    #[arg(long, conflicts_with = "sweep_v0")]
    v0: Option<f64>,
    /// Number of evenly spaced base probabilities in (0, 1].
    #[arg(long)]
    sweep_v0: Option<u32>,
    #[arg(long, default_value_t = 5000)]
    steps: u64,
    #[arg(long, default_value_t = 8)]
    ttl: u32,
    #[arg(long, default_value_t = 256)]
    cache: usize,
    #[arg(long, default_value_t = DEFAULT_MEAN_INTERGEN)]
    mean_intergen: f64,
    /// Replicates per (graph, policy, v0) point.
    #[arg(long, default_value_t = 3)]
    seeds: u32,
    #[arg(long, default_value_t = 1)]
    master_seed: u64,
    #[arg(long, value_enum, default_value_t = DelayArg::Pooled)]
    delay_mode: DelayArg,
    /// Worker threads; 0 uses every available core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TraceArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Index into the manifest's run list.
    #[arg(long)]
    run: usize,
    /// Write to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CurvesArgs {
    /// aggregated.csv, or a results directory containing it.
    #[arg(long = "in")]
    input: PathBuf,
    /// Drop points whose overhead ratio is below this value.
    #[arg(long)]
    rho_min: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

fn plan_from_args(args: &RunArgs) -> anyhow::Result<ExperimentPlan> {
    if let Some(path) = &args.manifest {
        return Ok(experiment::read_manifest(path)?.plan);
    }
    let graphs = if args.graphs == "gen" || args.graphs.starts_with("gen:") {
        GraphSource::Generate(GenerateSpec::parse(&args.graphs)?)
    } else {
        GraphSource::Directory(PathBuf::from(&args.graphs))
    };
    let params = match (&args.preset, args.sigma, args.delta, args.alpha, args.t_mon) {
        (Some(name), ..) => ParamSpec::Preset(name.clone()),
        (None, Some(sigma), Some(delta), Some(alpha), Some(t_mon)) => {
            ParamSpec::Explicit(AdaptiveParams::new(t_mon, sigma, delta, alpha))
        }
        (None, None, None, None, None) => ParamSpec::Preset(experiment::TABLE1_PRESET.into()),
        _ => anyhow::bail!("--sigma, --delta, --alpha and --t-mon must be given together"),
    };
    let v0 = match (args.v0, args.sweep_v0) {
        (Some(v), _) => V0Spec::Single(v),
        (None, Some(k)) => V0Spec::Sweep(k),
        (None, None) => ExperimentPlan::default().v0,
    };
    Ok(ExperimentPlan {
        graphs,
        policies: args.policies.clone(),
        v0,
        params,
        seeds: args.seeds,
        master_seed: args.master_seed,
        steps: args.steps,
        ttl: args.ttl,
        cache: args.cache,
        mean_intergen: args.mean_intergen,
        delay_mode: match args.delay_mode {
            DelayArg::Pooled => DelayMode::Pooled,
            DelayArg::TwoStage => DelayMode::TwoStage,
        },
    })
}

fn gen_graphs(args: &GenGraphsArgs) -> Result<(), ExperimentError> {
    let spec = GenerateSpec {
        count: args.count,
        n: args.n,
        edges_per_node: args.edges_per_node,
        d_max: args.d_max,
        seed: args.seed,
        max_attempts: args.max_attempts,
    };
    let graphs = experiment::generate_graph_set(&spec)?;
    experiment::write_graph_dir(&args.out_dir, &graphs)?;
    eprintln!(
        "wrote {} graphs to {}",
        graphs.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn run(args: &RunArgs) -> Result<(), Failure> {
    let plan = plan_from_args(args).map_err(Failure::Usage)?;
    let output = experiment::run_experiment(&plan, args.jobs)?;
    output.write(&args.out)?;
    let curves = adgossip::curves::emit_curves(&output.aggregated, None);
    experiment::write_curves(&args.out, &curves)?;
    eprintln!(
        "{} runs, {} aggregated rows written to {}",
        output.reports.len(),
        output.aggregated.len(),
        args.out.display()
    );
    Ok(())
}

fn trace(args: &TraceArgs) -> Result<(), Failure> {
    let manifest = experiment::read_manifest(&args.manifest)?;
    let text = experiment::replay_trace(&manifest.plan, args.run)?.to_text();
    match &args.out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn curves(args: &CurvesArgs) -> Result<(), Failure> {
    let input: &Path = &args.input;
    let file = if input.is_dir() {
        input.join(experiment::AGGREGATED_FILE)
    } else {
        input.to_path_buf()
    };
    let rows = experiment::read_aggregated(&file)?;
    let curves = adgossip::curves::emit_curves(&rows, args.rho_min);
    experiment::write_curves(&args.out, &curves)?;
    Ok(())
}

enum Failure {
    Usage(anyhow::Error),
    Experiment(ExperimentError),
    Other(anyhow::Error),
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        Failure::Experiment(e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn exit_code(failure: Failure) -> ExitCode {
    let (code, err) = match failure {
        Failure::Usage(e) => (1, e),
        Failure::Experiment(e) => {
            let code = if e.is_constraint_unsatisfiable() {
                3
            } else if matches!(
                e,
                ExperimentError::InvalidPlan(_) | ExperimentError::UnknownPreset(_)
            ) {
                1
            } else {
                2
            };
            (code, anyhow::Error::new(e))
        }
        Failure::Other(e) => (2, e),
    };
    eprintln!("error: {err:#}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::GenGraphs(args) => gen_graphs(args).map_err(Failure::from),
        Command::Run(args) => run(args),
        Command::Trace(args) => trace(args),
        Command::Curves(args) => curves(args),
        Command::Presets => {
            for name in experiment::preset_names() {
                match experiment::preset(name) {
                    Some(p) => println!(
                        "{name}: t_mon={} sigma={} delta={} alpha={}",
                        p.t_mon, p.sigma, p.delta, p.alpha
                    ),
                    None => println!(
                        "{name}: per-policy defaults (adaptive2 and adaptive3 get their own rows)"
                    ),
                }
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => exit_code(f),
    }
}
