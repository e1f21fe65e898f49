//! `graphwave`: standing waves of the focusing NLS equation on metric graphs.
//!
//! Exit status: 0 on success, 1 on usage or input errors, 2 on numerical failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "graphwave", version, about = "Standing waves of the focusing NLS equation on metric graphs")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Target grid spacing.
    #[arg(long, global = true, default_value_t = 0.05)]
    pub grid_h: f64,
    /// Truncation length of unbounded edges (raised automatically for slowly decaying waves).
    #[arg(long, global = true)]
    pub trunc: Option<f64>,
    /// Solver tolerance; each command falls back to its own default.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Worker threads for independent sweep points.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Output directory (default: $GRAPHWAVE_OUT, else the current directory).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct WaveArgs {
    /// Frequency ω < 0.
    #[arg(long, allow_hyphen_values = true)]
    pub omega: f64,
    /// Nonlinearity power.
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Comma-separated pulse edges for a multi-pulse seed.
    #[arg(long, value_delimiter = ',')]
    pub placement: Vec<String>,
    /// Smallest admissible ε = √|ω| for multi-pulse seeds.
    #[arg(long, default_value_t = 2.5)]
    pub eps0: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeArg {
    Conservative,
    Midpoint,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a graph file for structural problems.
    Validate { graph: PathBuf },
    /// Lowest eigenvalues of the Laplacian with the graph's vertex conditions.
    Spectrum {
        graph: PathBuf,
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Solve for a standing wave at fixed frequency.
    Solve {
        graph: PathBuf,
        #[command(flatten)]
        wave: WaveArgs,
    },
    /// Continue a branch of standing waves in the frequency.
    Branch {
        graph: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, allow_hyphen_values = true)]
        omega_min: f64,
        #[arg(long, allow_hyphen_values = true)]
        omega_max: f64,
        /// Starting frequency (default: the end the direction leaves from).
        #[arg(long, allow_hyphen_values = true)]
        omega_start: Option<f64>,
        #[arg(long, value_enum, default_value_t = Direction::Up)]
        direction: Direction,
        #[arg(long, default_value_t = 0.05)]
        ds: f64,
        #[arg(long, default_value_t = 400)]
        max_points: usize,
        #[arg(long, value_delimiter = ',')]
        placement: Vec<String>,
        #[arg(long, default_value_t = 2.5)]
        eps0: f64,
    },
    /// Stability verdict from the spectra of the linearization and the mass slope.
    Stability {
        graph: PathBuf,
        #[command(flatten)]
        wave: WaveArgs,
    },
    /// Leading-order vertex data for a pulse placement, compared with the solved wave.
    Dtn {
        graph: PathBuf,
        #[command(flatten)]
        wave: WaveArgs,
    },
    /// Time evolution from a (perturbed) standing wave.
    Evolve {
        graph: PathBuf,
        #[command(flatten)]
        wave: WaveArgs,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 1.0)]
        t_final: f64,
        #[arg(long, default_value_t = 10)]
        record_every: usize,
        /// Relative amplitude perturbation.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        perturb: f64,
        /// Restrict the perturbation to these edges.
        #[arg(long, value_delimiter = ',')]
        perturb_edge: Vec<String>,
        #[arg(long, value_enum, default_value_t = SchemeArg::Conservative)]
        scheme: SchemeArg,
    },
    /// Normalized gradient flow at prescribed masses.
    Groundstate {
        graph: PathBuf,
        /// One or more masses (comma-separated); each is an independent run.
        #[arg(long, value_delimiter = ',', required = true)]
        mass: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = 20000)]
        max_iter: usize,
    },
    /// Tabulate the half-period T₊(𝔭, 𝔮) over endpoint values.
    PeriodScan {
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 50)]
        n: usize,
        /// Endpoint slope as a fraction of the homoclinic slope √A(𝔭); ½ is the tadpole map.
        #[arg(long, default_value_t = 0.5)]
        slope_fraction: f64,
    },
}

/// Why a command failed, mapped to the exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<graphwave::Error> for Failure {
    fn from(e: graphwave::Error) -> Self {
        match e {
            graphwave::Error::NoConvergence(_) | graphwave::Error::Singular(_) => Failure::Numerical(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}
