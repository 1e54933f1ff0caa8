//! `qplateau`: batch driver for meshes, Dirichlet and Plateau solves,
//! verification suites and field analysis.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "qplateau", version, about = "Multiple-valued Dirichlet and Plateau solver")]
pub struct Cli {
    /// Worker threads; falls back to QP_THREADS, then to all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Directory receiving every file a command writes.
    #[arg(long, global = true, default_value = "qp-out")]
    pub out_dir: PathBuf,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the structured disk mesh and write it as qpmesh.
    Mesh {
        #[arg(long)]
        level: u32,
    },
    /// Solve the Q-valued Dirichlet problem for a builtin or file boundary.
    Dirichlet {
        #[arg(long, default_value_t = 4)]
        level: u32,
        /// Builtin boundary data (sqrt-z, re-z, identity, two-constants, variety).
        #[arg(long, conflicts_with = "boundary_file")]
        boundary: Option<String>,
        /// qpfield file with one value per boundary vertex, in loop order.
        #[arg(long)]
        boundary_file: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Solve the Plateau problem for a JSON problem file or a builtin.
    Plateau {
        #[arg(long, default_value_t = 4)]
        level: u32,
        #[arg(long, conflicts_with = "builtin")]
        problem: Option<PathBuf>,
        #[arg(long, value_enum)]
        builtin: Option<BuiltinProblem>,
        /// Radius for the builtin circle.
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Plane separation for the builtin parallel circles.
        #[arg(long, default_value_t = 10.0)]
        separation: f64,
        /// Polyline samples per builtin curve, as a multiple of the boundary vertex count.
        #[arg(long, default_value_t = 8)]
        oversample: usize,
        #[arg(long, default_value_t = 40)]
        outer_iters: usize,
        #[arg(long, value_enum, default_value_t = Gradient::Analytic)]
        gradient: Gradient,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Run a verification suite; exits with 1 when any check fails.
    Verify {
        suite: String,
        #[arg(long)]
        level: Option<u32>,
    },
    /// Branch, conformality and decomposition reports for a qpfield file.
    Analyze {
        field: PathBuf,
        /// Mesh the field lives on; inferred from the vertex count when absent.
        #[arg(long)]
        mesh: Option<PathBuf>,
        /// Inner radius of the boundary band used for the graph decomposition.
        #[arg(long, default_value_t = 0.9)]
        band: f64,
        /// Separation threshold for the graph decomposition.
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
    },
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 4)]
    pub restarts: usize,
    /// Search over sheet configurations with annealed cut and branch moves.
    #[arg(long)]
    pub anneal: bool,
    #[arg(long, default_value_t = 24)]
    pub anneal_steps: usize,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuiltinProblem {
    Circle,
    Variety,
    ParallelCircles,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gradient {
    Analytic,
    FiniteDifference,
}

/// Failures carry the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<qp_core::Error> for Failure {
    fn from(e: qp_core::Error) -> Self {
        Self::invalid(e.to_string())
    }
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var("QP_THREADS") {
        Ok(s) if !s.trim().is_empty() => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::invalid(format!("QP_THREADS must be a positive integer, got `{s}`"))),
        _ => Ok(None),
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    if let Some(n) = thread_count(cli.threads)? {
        if n == 0 {
            return Err(Failure::invalid("thread count must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::invalid(e.to_string()))?;
    }
    commands::dispatch(&cli)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
