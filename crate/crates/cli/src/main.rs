//! `qg`: run the metric-graph solvers from JSON configurations.
//!
//! Exit codes: 0 on success, 1 when a solver or the file system fails, 2 for
//! invalid configurations or arguments.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Solver(qgraph::Error),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(m) => write!(f, "config error: {m}"),
            Self::Solver(e) => write!(f, "{e}"),
            Self::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<qgraph::Error> for CliError {
    fn from(e: qgraph::Error) -> Self {
        Self::Solver(e)
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Solver(_) | Self::Io(_) => 1,
        }
    }
}

#[derive(Debug, Args)]
pub struct Globals {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Discretization scheme: uniform or chebyshev.
    #[arg(long, global = true)]
    pub scheme: Option<String>,
    /// Output directory; must not exist or be empty.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for randomized initial data.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override a config key, e.g. `--set options.maxPoints=50`. Values are
    /// parsed as JSON and fall back to strings.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub sets: Vec<String>,
}

#[derive(Debug, Parser)]
#[command(name = "qg", version, about = "Differential equations on metric graphs")]
struct Cli {
    #[command(flatten)]
    globals: Globals,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the Poisson problem with vertex data.
    Poisson,
    /// Eigenvalues of smallest magnitude and their eigenvectors.
    Eigs,
    /// Sample the secular determinant and locate its zeros.
    Secdet,
    /// Time-dependent problems.
    Evolve,
    /// Continue stationary NLS branches into a bifurcation diagram.
    Continue,
    /// The graph template gallery.
    Template {
        #[command(subcommand)]
        action: TemplateAction,
    },
}

#[derive(Debug, Subcommand)]
enum TemplateAction {
    /// Tags and descriptions of all templates.
    List,
    /// Parameters accepted by one template.
    Show { tag: String },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = &cli.globals;
    let cfg = || RunConfig::load(g.config.as_deref(), &g.sets);
    match &cli.command {
        Command::Poisson => commands::poisson(&cfg()?, g),
        Command::Eigs => commands::eigs_cmd(&cfg()?, g),
        Command::Secdet => commands::secdet(&cfg()?, g),
        Command::Evolve => commands::evolve(&cfg()?, g),
        Command::Continue => commands::continue_cmd(&cfg()?, g),
        Command::Template { action } => match action {
            TemplateAction::List => {
                commands::template_list();
                Ok(())
            }
            TemplateAction::Show { tag } => commands::template_show(tag),
        },
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qg: {e}");
            ExitCode::from(e.code())
        }
    }
}
