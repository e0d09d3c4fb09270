//! `riskspace`: batch computations on finite learning problems stored as JSON.
//!
//! Exit status is 0 on success, 1 on invalid input (with an error object on
//! stderr) and 2 when a size cap is exceeded.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use output::CliError;

#[derive(Parser, Debug)]
#[command(name = "riskspace", version, about = "Distances and bounds between finite learning problems")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Exponent for `L^p` quantities; `inf` is accepted where supported.
    #[arg(long, global = true, default_value = "1")]
    pub p: String,
    /// Largest |H|·|H′| enumerated by exact solvers.
    #[arg(long, global = true, default_value_t = 12)]
    pub cap_pairs: usize,
    /// Largest |supp η|·|supp η′| handed to exact solvers.
    #[arg(long, global = true, default_value_t = 256)]
    pub cap_support: usize,
    /// Report a capacity error instead of a heuristic upper bound past the caps.
    #[arg(long, global = true)]
    pub no_fallback: bool,
    /// Height-merge tolerance for Reeb graphs.
    #[arg(long, global = true, default_value_t = 0.0)]
    pub tol: f64,
    /// Write the result here (atomically) instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact Risk distance with witnesses.
    Distance { a: PathBuf, b: PathBuf },
    /// Weighted L^p Risk distance by alternating minimization.
    DistanceLp {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
    },
    /// A stability bound: shared_eta_H, shared_all_but_eta, shared_all_but_H,
    /// tv, w1, lower or coarsening.
    Bound {
        a: PathBuf,
        b: Option<PathBuf>,
        #[arg(long)]
        mode: String,
        /// Response partition as JSON, e.g. `[[0,1],[2]]` (coarsening mode).
        #[arg(long)]
        blocks: Option<String>,
    },
    /// Run a corruption pipeline and emit its bound ledger.
    Corrupt {
        problem: PathBuf,
        pipeline: PathBuf,
        /// Also write the corrupted problem here.
        #[arg(long)]
        result: Option<PathBuf>,
    },
    /// Coarsen the response space along a partition.
    Coarsen {
        problem: PathBuf,
        #[arg(long)]
        blocks: String,
    },
    /// Draw an empirical problem.
    Sample {
        problem: PathBuf,
        #[arg(long)]
        n: usize,
    },
    /// Empirical convergence experiment.
    Convergence {
        problem: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
        ns: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
    /// Exact and Monte-Carlo Rademacher complexity.
    Rademacher {
        problem: PathBuf,
        #[arg(long, default_value_t = 1)]
        m: usize,
        /// Monte-Carlo draws; 0 skips the estimate.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Second problem for the stability inequality at the exact witness.
        #[arg(long)]
        against: Option<PathBuf>,
    },
    /// Reeb graph of the risk landscape.
    Reeb {
        problem: PathBuf,
        /// Join predictors at d_{ℓ,η} distance at most this instead of using
        /// the file's edges.
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Connected Risk distance between predictor graphs.
    ConnectedDistance {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Point on the geodesic between two problems.
    Geodesic {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        t: f64,
    },
    /// Loss profiles and profile-level comparisons.
    Profile { a: PathBuf, b: Option<PathBuf> },
    /// Check that RICH simulates BASE through the given maps.
    Verify {
        rich: PathBuf,
        base: PathBuf,
        maps: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli.global, &cli.command).and_then(|out| output::emit(&cli.global, out)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}

impl From<riskspace::Error> for CliError {
    fn from(e: riskspace::Error) -> Self {
        CliError::Core(e)
    }
}
