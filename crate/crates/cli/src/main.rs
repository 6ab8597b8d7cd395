mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};

use commands::Failure;

/// Validate, split, simulate and emit workflow IR documents, and synthesize
/// or tune workflows with a model client.
#[derive(Debug, Parser)]
#[command(name = "wfopt", version)]
pub struct Cli {
    /// Print machine-readable JSON instead of tables.
    #[arg(long, global = true)]
    pub json: bool,

    /// TOML settings file; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check an IR document. Exits 3 when it has errors.
    Validate {
        ir: PathBuf,
    },
    /// Partition a workflow into parts that each fit the budget.
    Split(SplitArgs),
    /// Run the cache-aware execution simulator.
    Simulate(SimulateArgs),
    /// Render an IR document, or every part of a split, as Argo YAML.
    Emit(EmitArgs),
    /// Turn a natural-language description into a builder program and IR.
    Synth(SynthArgs),
    /// Pick the best hyperparameter setting from predicted training logs.
    Tune(TuneArgs),
    /// Write one of the built-in example workflows as IR.
    Fixture {
        /// diamond, coin-flip, chain, cache-example, reuse-heavy, big450 or model-selection
        name: String,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    pub ir: PathBuf,
    /// Largest emitted document per part, e.g. 2MiB.
    #[arg(long)]
    pub size_limit: Option<String>,
    #[arg(long)]
    pub step_limit: Option<u64>,
    #[arg(long)]
    pub pod_limit: Option<u64>,
    /// Directory for part IRs and manifest.json.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub ir: PathBuf,
    /// NO, ALL, IMPORTANCE, FIFO or LRU.
    #[arg(long)]
    pub policy: Option<String>,
    /// Comma-separated policies to run side by side.
    #[arg(long, value_delimiter = ',')]
    pub compare: Vec<String>,
    /// Cache capacity, e.g. 10GiB.
    #[arg(long)]
    pub capacity: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub n_layers: Option<usize>,
    #[arg(long)]
    pub io_cost: Option<f64>,
    #[arg(long)]
    pub read_cost: Option<f64>,
    /// At most this many jobs run at once.
    #[arg(long)]
    pub parallelism: Option<usize>,
    /// JSON object mapping step names to their scripted results.
    #[arg(long)]
    pub results: Option<PathBuf>,
    /// Event trace CSV. With --compare, one file per policy.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("input").required(true).args(["ir", "manifest"])))]
pub struct EmitArgs {
    pub ir: Option<PathBuf>,
    /// manifest.json written by `split`; part IRs are read from its directory.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, default_value = "argo")]
    pub backend: String,
    /// Output file, or directory when emitting a split.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    pub description: PathBuf,
    /// Directory of reference snippets.
    #[arg(long)]
    pub lake: Option<PathBuf>,
    /// `mock:<script.json>` or `http:<endpoint>`.
    #[arg(long)]
    pub client: Option<String>,
    #[arg(long)]
    pub baseline_score: Option<f64>,
    #[arg(long)]
    pub max_rounds: Option<u32>,
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Reviewer feedback for one more regeneration pass.
    #[arg(long)]
    pub feedback: Option<String>,
    /// Workflow name; defaults to the description file stem.
    #[arg(long)]
    pub name: Option<String>,
    /// Directory for program.jsonl and workflow.json.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[arg(long)]
    pub data_card: PathBuf,
    #[arg(long)]
    pub model_card: PathBuf,
    /// JSON array of hyperparameter objects.
    #[arg(long)]
    pub hp: PathBuf,
    #[arg(long)]
    pub client: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure { code, error, stdout }) => {
            if let Some(out) = stdout {
                print!("{out}");
            }
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
