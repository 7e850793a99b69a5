// SPDX-License-Identifier: Apache-2.0

//! `subrecover`: generate synthetic workloads, build recovery plans, run the
//! recovery-probability experiment and chart its summary.

mod chart;
mod manifest;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use subgraph_recovery::sim::{evaluate_collection, generate_world, run_experiment_with_jobs, GeneratorParams};
use subgraph_recovery::{build_plan, CompositeGraph, PlanConfig, RecoveryPlan, Registry, RegistryFile, Report, Strategy, Summary, Taxonomy};

use crate::manifest::RunManifest;

#[derive(Parser)]
#[command(name = "subrecover", version, about = "Failure recovery for composite services by subgraph replacement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a taxonomy, registry and collection of composite services.
    Gen(GenArgs),
    /// Precompute recovery plans for every graph of a collection.
    Plan(PlanArgs),
    /// Fail every node of every graph and measure recovery per strategy.
    Simulate(SimulateArgs),
    /// Draw the recovery probabilities of a summary as an SVG bar chart.
    Chart(ChartArgs),
}

#[derive(Args, Clone)]
struct SearchArgs {
    /// Largest relative QoS distance a replacement may have.
    #[arg(long, default_value_t = 0.2)]
    epsilon: f64,
    /// Largest replacement graph, in services.
    #[arg(long, default_value_t = 3)]
    max_size: usize,
    /// Accept exact interface matches only.
    #[arg(long)]
    strict_exact: bool,
    /// Largest fragment considered (default: unbounded).
    #[arg(long)]
    max_fragment_size: Option<usize>,
}

#[derive(Args, Clone)]
struct WorldArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Composite services per collection.
    #[arg(long, default_value_t = 200)]
    graphs: usize,
    #[arg(long, default_value_t = 2)]
    min_order: usize,
    #[arg(long, default_value_t = 6)]
    max_order: usize,
    /// Concepts in the generated taxonomy.
    #[arg(long, default_value_t = 60)]
    concepts: usize,
    /// Longest parent chain in the generated taxonomy.
    #[arg(long, default_value_t = 4)]
    depth: usize,
    /// Base services in the generated registry.
    #[arg(long, default_value_t = 120)]
    services: usize,
    /// Probability that a service gets a direct substitute.
    #[arg(long, default_value_t = 0.4)]
    p_atomic_sub: f64,
    /// Probability that a service gets a two-service chain substitute.
    #[arg(long, default_value_t = 0.4)]
    p_chain_sub: f64,
    #[command(flatten)]
    search: SearchArgs,
}

impl WorldArgs {
    fn params(&self, trials: usize) -> GeneratorParams {
        GeneratorParams {
            seed: self.seed,
            n_concepts: self.concepts,
            taxonomy_depth: self.depth,
            n_services: self.services,
            n_graphs: self.graphs,
            order_min: self.min_order,
            order_max: self.max_order,
            p_atomic_substitute: self.p_atomic_sub,
            p_chain_substitute: self.p_chain_sub,
            epsilon: self.search.epsilon,
            max_size: self.search.max_size,
            trials,
            strict_exact: self.search.strict_exact,
            max_fragment_size: self.search.max_fragment_size,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    world: WorldArgs,
    /// Output directory.
    #[arg(short, long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    registry: PathBuf,
    #[arg(long)]
    collection: PathBuf,
    #[command(flatten)]
    search: SearchArgs,
    /// Output directory.
    #[arg(short, long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    world: WorldArgs,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Strategies to report, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "atomic,composite")]
    strategies: Vec<Strategy>,
    /// Worker threads for independent trials.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Evaluate this registry instead of generating one (needs --collection).
    #[arg(long, requires = "collection")]
    registry: Option<PathBuf>,
    /// Evaluate this collection instead of generating one (needs --registry).
    #[arg(long, requires = "registry")]
    collection: Option<PathBuf>,
    /// Output directory.
    #[arg(short, long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ChartArgs {
    #[arg(long, default_value = "out/summary.json")]
    summary: PathBuf,
    /// One group of bars per graph order.
    #[arg(long)]
    by_order: bool,
    /// Output SVG file.
    #[arg(short, long, default_value = "out/chart.svg")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = match cli.command {
        Command::Gen(args) => gen(args),
        Command::Plan(args) => plan(args),
        Command::Simulate(args) => simulate(args),
        Command::Chart(args) => chart(args),
    };
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            // Parameter values clap cannot check on its own are usage errors too.
            let usage = matches!(e.downcast_ref(), Some(subgraph_recovery::Error::InvalidParams(_)));
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}

/// Prints to stdout. A closed pipe (`| head`) is not an error.
fn say(text: String) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot decode {}", path.display()))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(path, text)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn load_world(registry: &Path, collection: &Path) -> Result<(Taxonomy, Registry, Vec<CompositeGraph>)> {
    let (taxonomy, reg) = read_json::<RegistryFile>(registry)?
        .into_parts()
        .with_context(|| format!("invalid registry {}", registry.display()))?;
    let graphs: Vec<CompositeGraph> = read_json(collection)?;
    Ok((taxonomy, reg, graphs))
}

fn gen(args: GenArgs) -> Result<()> {
    let params = args.world.params(1);
    let (world, graphs) = generate_world(params.seed, &params)?;
    let registry = args.out.join("registry.json");
    let collection = args.out.join("collection.json");
    write_json(&registry, &RegistryFile::from_parts(&world.taxonomy, &world.registry))?;
    write_json(&collection, &graphs)?;
    say(format!("{} services, {} graphs written to {}\n", world.registry.len(), graphs.len(), args.out.display()));
    RunManifest::new("gen", &params, Some(params.seed))
        .inputs(&[])?
        .outputs(&[&registry, &collection])?
        .write(&args.out)
}

fn plan(args: PlanArgs) -> Result<()> {
    let (taxonomy, registry, graphs) = load_world(&args.registry, &args.collection)?;
    let config = PlanConfig {
        epsilon: args.search.epsilon,
        max_fragment_size: args.search.max_fragment_size,
        max_replacement_size: args.search.max_size,
        strict_exact: args.search.strict_exact,
    };
    let plans = graphs
        .iter()
        .map(|g| build_plan(g, &registry, &taxonomy, &config).with_context(|| format!("cannot plan graph {}", g.id)))
        .collect::<Result<Vec<RecoveryPlan>>>()?;
    say(plans.iter().map(|p| format!("{}\t{}\n", p.graph, p.entry_count())).collect());
    let out = args.out.join("plans.json");
    write_json(&out, &plans)?;
    RunManifest::new("plan", &config, None)
        .inputs(&[&args.registry, &args.collection])?
        .outputs(&[&out])?
        .write(&args.out)
}

fn simulate(args: SimulateArgs) -> Result<()> {
    if args.strategies.is_empty() {
        bail!("no strategies selected");
    }
    let mut strategies = args.strategies.clone();
    strategies.sort();
    strategies.dedup();
    let (report, inputs) = match (&args.registry, &args.collection) {
        (Some(registry), Some(collection)) => {
            let (taxonomy, reg, graphs) = load_world(registry, collection)?;
            let params = args.world.params(1);
            let trial = evaluate_collection(&graphs, &reg, &taxonomy, &params.plan_config())?;
            (Report::new(params, vec![trial]), vec![registry.clone(), collection.clone()])
        }
        _ => (run_experiment_with_jobs(&args.world.params(args.trials), args.jobs.max(1))?, Vec::new()),
    };
    let csv_path = args.out.join("report.csv");
    let summary_path = args.out.join("summary.json");
    write(&csv_path, report.to_csv(&strategies)?)?;
    let summary: Summary = report.summary(&strategies);
    write_json(&summary_path, &summary)?;
    say(summary
        .strategies
        .iter()
        .map(|s| format!("{:<9} mean {:.4}  sd {:.4}\n", s.strategy.name(), s.mean, s.std_dev))
        .collect());
    let inputs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    RunManifest::new("simulate", &report.params, Some(report.params.seed))
        .inputs(&inputs)?
        .outputs(&[&csv_path, &summary_path])?
        .write(&args.out)
}

fn chart(args: ChartArgs) -> Result<()> {
    let summary: Summary = read_json(&args.summary)?;
    let svg = chart::render(&summary, args.by_order)?;
    write(&args.out, svg)?;
    let dir = args.out.parent().unwrap_or(Path::new("."));
    let name = args.out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    RunManifest::new("chart", &serde_json::json!({ "by_order": args.by_order }), None)
        .inputs(&[&args.summary])?
        .outputs(&[&args.out])?
        .write_as(&dir.join(format!("{name}.manifest.json")))
}
