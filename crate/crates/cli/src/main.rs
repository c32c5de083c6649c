use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gelo_core::GeloError;

mod commands;
mod config;

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "gelo", version, about = "Obfuscated GEMM offload: simulator, benchmarks and attack sweeps")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory for generated files.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "ADDR")]
    endpoint: Option<String>,
    /// Observation log written by `serve`.
    #[arg(long, global = true, value_name = "PATH")]
    capture: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set dims.n=256`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the untrusted GEMM server until stopped.
    Serve,
    /// Time gelo and baseline offload rounds against a running server.
    Bench(commands::BenchArgs),
    /// Run an attack sweep on synthetic hidden states.
    Attack(commands::AttackArgs),
    /// Print the projection/attention cost crossover.
    Crossover(commands::CrossoverArgs),
    /// Check the covariance leak identities.
    Gramcheck,
    /// Write a synthetic hidden-state dataset and its report.
    Datagen(commands::DatagenArgs),
}

#[derive(Debug)]
pub enum CliError {
    /// A check the command exists to perform did not hold.
    Failure(String),
    Config(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Failure(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Failure(m) => write!(f, "check failed: {m}"),
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl From<GeloError> for CliError {
    fn from(e: GeloError) -> Self {
        match e {
            GeloError::Io(_) | GeloError::Transport { .. } | GeloError::Wire(_) | GeloError::Remote { .. } => {
                CliError::Io(e.to_string())
            }
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn resolve_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for kv in &common.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(endpoint) = &common.endpoint {
        cfg.endpoint = endpoint.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = resolve_config(&cli.common)?;
    match cli.command {
        Command::Serve => commands::serve(&cfg, cli.common.capture.as_deref()),
        Command::Bench(args) => commands::bench(&cfg, &args),
        Command::Attack(args) => commands::attack(&cfg, &args),
        Command::Crossover(args) => commands::crossover(&args),
        Command::Gramcheck => commands::gramcheck(&cfg),
        Command::Datagen(args) => commands::datagen(&cfg, &args),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gelo: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
