//! `nem`: theory reports, single simulations, phase-diagram sweeps, random
//! matrix checks and the network experiment.
//!
//! Exit codes: 0 success, 1 runtime or I/O error, 2 bad configuration,
//! 3 sweep finished with some failed runs.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::CliError;

#[derive(Parser, Debug)]
#[command(name = "nem", version, about = "Random nonlinear equations on the sphere")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Master seed (overrides the config's master_seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output file (theory, rmt-check, nn) or directory (simulate, phase-diagram).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

/// Experiment description: a config file, flags, or both (flags win).
#[derive(Args, Debug, Clone, Default)]
pub struct ConfigArgs {
    /// Config file, key-value (`# nem-config v1`) or JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Mixture coefficients ξ_0,ξ_1,...
    #[arg(long, allow_hyphen_values = true)]
    pub xi: Option<String>,
    /// Number of unknowns.
    #[arg(long)]
    pub d: Option<usize>,
    /// gd, hd or two-phase.
    #[arg(long)]
    pub algorithm: Option<String>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// AMP gain: `auto` or a number.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<String>,
    /// Any other config key, as `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Every asymptotic prediction for one mixture and α.
    Theory {
        #[arg(long, allow_hyphen_values = true)]
        xi: String,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// json or csv.
        #[arg(long, default_value = "json")]
        report: String,
        /// Use the factor-two phase-one energy variant.
        #[arg(long)]
        literal_remark: bool,
    },
    /// One run at one α: trace (CSV and JSON) plus the map header.
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Defaults to the first point of the config's alpha_grid.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Sweep over α and seeds with theory columns and a gnuplot script.
    PhaseDiagram {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Comma-separated α values.
        #[arg(long)]
        alpha_grid: Option<String>,
        /// Seeds per α.
        #[arg(long)]
        seeds: Option<usize>,
        /// fig1 or plain.
        #[arg(long, default_value = "fig1")]
        style: String,
    },
    /// Smallest eigenvalue of a·GOE + b·ZᵀZ against the predicted edge.
    RmtCheck {
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 0.0)]
        b: f64,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long = "N", default_value_t = 1500)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        trials: usize,
    },
    /// Two-layer ELU network on random labels against the matched theory.
    Nn {
        #[arg(long, default_value_t = 20)]
        m: usize,
        #[arg(long = "D", default_value_t = 20)]
        input_dim: usize,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        /// Comma-separated α values.
        #[arg(long)]
        alpha_grid: String,
        #[arg(long, default_value_t = 0.1)]
        lr: f64,
        #[arg(long, default_value_t = 2000)]
        epochs: usize,
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        #[arg(long, default_value_t = 4)]
        batch: usize,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let c = &cli.common;
    match cli.command {
        Command::Theory { xi, alpha, report, literal_remark } => commands::theory(c, &xi, alpha, &report, literal_remark),
        Command::Simulate { cfg, alpha } => commands::simulate(c, &cfg, alpha),
        Command::PhaseDiagram { cfg, alpha_grid, seeds, style } => {
            commands::phase_diagram(c, &cfg, alpha_grid.as_deref(), seeds, &style)
        }
        Command::RmtCheck { a, b, alpha, n, trials } => commands::rmt_check(c, a, b, alpha, n, trials),
        Command::Nn { m, input_dim, a, alpha_grid, lr, epochs, seeds, batch } => {
            commands::nn(c, commands::NnArgs { m, input_dim, a, alpha_grid, lr, epochs, seeds, batch })
        }
    }
}

fn main() -> ExitCode {
    // clap reports usage errors with exit code 2 itself
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nem: {e}");
            ExitCode::from(e.code())
        }
    }
}
