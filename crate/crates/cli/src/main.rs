use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spparafac::BaselineMode;

mod commands;
mod config;

use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "spparafac", version, about = "Sparse PARAFAC models for multivariate categorical data")]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for replicate runs.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the Gibbs sampler on a dataset CSV.
    Fit(FitArgs),
    /// Posterior summaries from a fitted run.
    Summarize(SummarizeArgs),
    /// Summaries of the log-linear coefficients induced by the prior.
    PriorSim(PriorSimArgs),
    /// Generate a synthetic dataset and its ground truth.
    Simulate(SimulateArgs),
    /// Repeated simulate-fit-summarize runs with power and coverage tables.
    Replicate(ReplicateArgs),
}

#[derive(Debug, Args, Default)]
pub struct ChainArgs {
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    /// Truncation level K.
    #[arg(long)]
    pub truncation: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, value_parser = parse_baseline)]
    pub baseline: Option<BaselineMode>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Dataset CSV with a header row.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Declared level counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<usize>>,
    /// Store the allocation vector with every retained draw.
    #[arg(long)]
    pub keep_z: bool,
    #[command(flatten)]
    pub chain: ChainArgs,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    /// Directory of a fitted run (default: the output directory).
    #[arg(long)]
    pub run: Option<PathBuf>,
    /// Posterior Cramér's V matrices.
    #[arg(long)]
    pub cramers_v: bool,
    /// Binary variable set for log-linear coefficients, e.g. `2,4,12,14`. Repeatable.
    #[arg(long)]
    pub beta: Vec<String>,
    /// Cell probability request `var:code,var:code`. Repeatable.
    #[arg(long)]
    pub cell: Vec<String>,
    /// Marginal probability request `var:code`. Repeatable.
    #[arg(long)]
    pub marginal: Vec<String>,
    #[arg(long)]
    pub bins: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PriorSimArgs {
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub draws: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub truncation: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Built-in scenario: loglinear, subpop or glm. Replaces the configured one.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReplicateArgs {
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Seed of replicate 0; replicate r uses base + r. Same as `--seed`.
    #[arg(long)]
    pub base_seed: Option<u64>,
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[command(flatten)]
    pub chain: ChainArgs,
}

fn parse_baseline(s: &str) -> Result<BaselineMode, String> {
    match s {
        "uniform" => Ok(BaselineMode::Uniform),
        "empirical" => Ok(BaselineMode::Empirical),
        _ => Err(format!("unknown baseline '{s}' (expected uniform or empirical)")),
    }
}

fn run(cli: Cli) -> spparafac::Result<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        config.seed = cli.seed;
    }
    if cli.out.is_some() {
        config.out = cli.out.clone();
    }
    if cli.threads.is_some() {
        config.threads = cli.threads;
    }
    commands::init_threads(config.threads)?;
    match cli.command {
        Command::Fit(args) => commands::fit::run(config, args),
        Command::Summarize(args) => commands::summarize::run(config, args),
        Command::PriorSim(args) => commands::prior_sim::run(config, args),
        Command::Simulate(args) => commands::simulate::run(config, args),
        Command::Replicate(args) => commands::replicate::run(config, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
