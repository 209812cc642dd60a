//! The `sdx` command line: each subcommand wraps one pipeline stage and
//! streams one JSON record per line between files or pipes.

mod commands;
mod io;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sdx_core::config::RunConfig;
use sdx_core::corpus::Stage;
use sha2::{Digest, Sha256};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NETWORK: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Network(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Network(_) => EXIT_NETWORK,
        }
    }
}

pub(crate) fn data(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "sdx", version, about = "Bug-fix corpus pipeline: mine, filter, encode, split, retrieve, evaluate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum SplitKind {
    Random,
    CrossProject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum QueryField {
    /// Rendered unified diff of the commit.
    Diff,
    /// Structure-based encoding of the buggy code.
    Diffsbt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum StageArg {
    Pretrain,
    Finetune,
}

impl From<StageArg> for Stage {
    fn from(s: StageArg) -> Stage {
        match s {
            StageArg::Pretrain => Stage::Pretrain,
            StageArg::Finetune => Stage::Finetune,
        }
    }
}

#[derive(Debug, Args)]
pub(crate) struct Options {
    /// Input file, directory or `-` for stdin
    #[arg(long, global = true)]
    pub input: Option<String>,
    /// Output file or directory, `-` for stdout
    #[arg(long, global = true)]
    pub output: Option<String>,
    /// `key = value` config file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub stage: Option<StageArg>,
    #[arg(long = "context-radius", global = true)]
    pub context_radius: Option<u32>,
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "random")]
    pub split: SplitKind,
    /// Embedding provider command (one text per stdin line, one vector per stdout line)
    #[arg(long = "provider-cmd", global = true)]
    pub provider_cmd: Option<String>,
    #[arg(long = "query-field", global = true, value_enum, default_value = "diff")]
    pub query_field: QueryField,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Read commits from a git clone (directory) or an NDJSON dump (file)
    Ingest {
        /// Repository name recorded in each commit (defaults to the directory name)
        #[arg(long)]
        repo_name: Option<String>,
    },
    /// Keep bug-fix commits that pass the noise filters
    Filter {
        /// Also write one decision per input commit to this file
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Encode filtered commits as stage-tagged dataset rows
    Encode,
    /// Split rows into train and evaluation partitions (one file each in --output)
    Split,
    /// Build a nearest-neighbour index from training rows
    Index,
    /// Retrieve an explanation for every query row
    Explain {
        /// Index file written by `index`
        #[arg(long)]
        index: PathBuf,
    },
    /// Score explanations against references
    Eval,
    /// List candidate repositories from the hosting search API
    FetchRepos {
        #[arg(long, default_value_t = 300)]
        min_stars: u64,
        /// Search API base URL
        #[arg(long)]
        api_base: Option<String>,
    },
}

/// Effective configuration: defaults, then the config file, then flags.
fn resolve_config(opts: &Options) -> Result<RunConfig, CliError> {
    let mut cfg = match &opts.config {
        Some(path) => RunConfig::load(path).map_err(|e| CliError::Usage(e.to_string()))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if let Some(r) = opts.context_radius {
        cfg.context_radius = r;
    }
    if let Some(k) = opts.k {
        cfg.k = k;
    }
    if let Some(cmd) = &opts.provider_cmd {
        cfg.provider_cmd = Some(cmd.clone());
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

/// `sha256` of the canonical config text, in hex.
pub fn config_hash(cfg: &RunConfig) -> String {
    let digest = Sha256::digest(cfg.canonical().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("sdx: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let cfg = resolve_config(&cli.opts)?;
    eprintln!(
        "sdx {} config sha256:{} seed {}",
        env!("CARGO_PKG_VERSION"),
        config_hash(&cfg),
        cfg.seed
    );
    let opts = &cli.opts;
    match cli.command {
        Command::Ingest { repo_name } => commands::ingest(opts, repo_name),
        Command::Filter { report } => commands::filter(opts, &cfg, report),
        Command::Encode => commands::encode(opts, &cfg),
        Command::Split => commands::split(opts, &cfg),
        Command::Index => commands::index(opts, &cfg),
        Command::Explain { index } => commands::explain(opts, &cfg, &index),
        Command::Eval => commands::eval(opts, &cfg),
        Command::FetchRepos { min_stars, api_base } => commands::fetch_repos(opts, min_stars, api_base),
    }
}
