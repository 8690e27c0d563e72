//! `tramor`: runs the full-order, offline and reduced-order stages from a JSON
//! config, or one of the named recipes.

mod commands;
mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tramor::experiments::{ExperimentConfig, Recipe};

#[derive(Debug, Parser)]
#[command(name = "tramor", version, about = "Shifted-POD model reduction experiments")]
pub struct Cli {
    /// JSON experiment config; omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `io.out_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the parameter sweep.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Also write whitespace-separated tables.
    #[arg(long, global = true)]
    gnuplot: bool,
    /// Recorded in the manifest; every stage is deterministic.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the full-order model and export its snapshots.
    Fom,
    /// Compute the decomposition and its singular values.
    Offline {
        /// Read snapshots from a binary file instead of simulating.
        #[arg(long)]
        snapshots: Option<PathBuf>,
    },
    /// Integrate the reduced model and report its errors.
    Rom {
        #[arg(long)]
        snapshots: Option<PathBuf>,
        /// Read the decomposition from a binary file instead of computing it.
        #[arg(long)]
        decomposition: Option<PathBuf>,
    },
    /// Errors of reduced models across transport velocities.
    Sweep,
    /// Adaptive step counts of full and reduced models.
    Steps,
    /// Named end-to-end experiment.
    Repro {
        #[arg(value_parser = parse_recipe)]
        recipe: Recipe,
    },
}

fn parse_recipe(s: &str) -> Result<Recipe, String> {
    s.parse().map_err(|e: tramor::Error| e.to_string())
}

/// Why a run stopped; decides the exit code.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<tramor::Error> for Failure {
    fn from(e: tramor::Error) -> Self {
        use tramor::Error as E;
        match e {
            e if e.is_numerical() => Failure::Numerical(e.to_string()),
            e @ (E::InvalidArgument(_) | E::Unsupported(_) | E::Dimension(_) | E::OutOfRange { .. }) => Failure::Config(e.to_string()),
            e => Failure::Io(e.to_string()),
        }
    }
}

/// Parses a config file; errors carry the JSON path of the offending field.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        Failure::Config(format!("{}: field `{field}`: {}", path.display(), e.inner()))
    })?;
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TRAMOR_LOG", "warn")).format_timestamp(None).init();
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("tramor: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
