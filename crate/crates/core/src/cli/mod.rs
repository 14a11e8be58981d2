//! Batch front end: configuration files in, CSV files out.

pub mod config;
pub mod run;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::{parse_config, parse_config_for, Family, RunConfig, Task};
pub use run::{eigentraj_to_path_file, run, RunOutput};

use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "spfl",
    version,
    about = "Spectral flow and winding numbers of Hermitian matrix paths"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectral flow by adaptive partition
    Flow(RunArgs),
    /// Spectral flow and winding number of the exponentiated loop
    Winding(RunArgs),
    /// Alternating edge-flow sum of a homotopy rectangle
    Rectangle(RunArgs),
    /// Gap, strong-resolvent and bump moduli of a fixture family
    Diagnose(RunArgs),
    /// Eigenvalue trajectory, also rendered as a diagonal matrix path file
    Eigentraj(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Run configuration file
    #[arg(long)]
    pub config: PathBuf,
    /// Output prefix; overrides `output` in the configuration
    #[arg(long)]
    pub out: Option<String>,
    /// Seed for randomized families; overrides `seed` in the configuration
    #[arg(long)]
    pub seed: Option<u64>,
    /// Suppress progress notes on standard error
    #[arg(long)]
    pub quiet: bool,
}

impl Command {
    fn split(&self) -> (Task, &RunArgs) {
        match self {
            Command::Flow(a) => (Task::Flow, a),
            Command::Winding(a) => (Task::Winding, a),
            Command::Rectangle(a) => (Task::Rectangle, a),
            Command::Diagnose(a) => (Task::Diagnostic, a),
            Command::Eigentraj(a) => (Task::Eigentraj, a),
        }
    }
}

fn execute_inner(cli: &Cli, err: &mut dyn Write) -> Result<()> {
    let (task, args) = cli.command.split();
    let text =
        std::fs::read_to_string(&args.config).map_err(|e| Error::Io(format!("{}: {e}", args.config.display())))?;
    let mut config = parse_config_for(&text, Some(task))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.output = out.clone();
    }
    let base = args.config.parent().unwrap_or(Path::new("."));
    let quiet = args.quiet;
    let mut progress = |msg: &str| {
        if !quiet {
            let _ = writeln!(err, "spfl: {msg}");
        }
    };
    let output = run(&config, base, &mut progress)?;
    for name in output.write(&config.output)? {
        progress(&format!("wrote {name}"));
    }
    Ok(())
}

/// Runs a parsed command line; returns the process exit status.
pub fn execute(cli: &Cli, err: &mut dyn Write) -> i32 {
    match execute_inner(cli, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "spfl: error [{}]: {e}", e.module());
            1
        }
    }
}
