//! Thin command-line front end; all behavior lives in the library's
//! `experiments` module.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mfrl::experiments::{
    self, config, AblationKind, CliOverrides, CommandKind,
};

#[derive(Parser)]
#[command(name = "mfrl", about = "Search-and-matching labor market experiments", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON configuration file merged over the command defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated seed list, e.g. --seeds 1,2,3.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Output root (default: $MFRL_OUTDIR or ./runs).
    #[arg(long)]
    outdir: Option<String>,
    /// Override one config key, e.g. --param c=0.546 or --param ddpg.gamma=0.95.
    /// Bare keys address the model parameters; dotted keys walk the tree.
    #[arg(long = "param")]
    params: Vec<String>,
}

impl Common {
    fn overrides(&self, omega: Option<f64>) -> CliOverrides {
        CliOverrides {
            config_path: self.config.clone(),
            seeds: self.seeds.clone(),
            outdir: self.outdir.clone(),
            params: self.params.clone(),
            omega,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AblationArg {
    StructuralOnly,
    ParametricOnly,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the theoretical steady state and persist steady_state.json.
    SteadyState {
        #[command(flatten)]
        common: Common,
    },
    /// Train the learner in the closed-loop environment (uncorrected).
    Naive {
        #[command(flatten)]
        common: Common,
    },
    /// Run the calibrated mean-field fixed-point iteration.
    Calibrated {
        #[command(flatten)]
        common: Common,
        /// Use the deterministic dynamic-programming best response instead
        /// of the learner.
        #[arg(long)]
        oracle: bool,
        /// Damping step for the field update.
        #[arg(long)]
        omega: Option<f64>,
    },
    /// Run a single-correction ablation.
    Ablation {
        #[arg(value_enum)]
        which: AblationArg,
        #[command(flatten)]
        common: Common,
    },
    /// Run the learning-free verification suite.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Also write the report JSON to this path.
        #[arg(long)]
        report_path: Option<PathBuf>,
    },
}

fn run() -> mfrl::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::SteadyState { common } => {
            let cfg = config::resolve(CommandKind::SteadyState, &common.overrides(None))?;
            let out = experiments::cmd_steady_state(cfg)?;
            eprintln!("wrote {}", out.path.display());
        }
        Command::Naive { common } => {
            let cfg = config::resolve(CommandKind::Naive, &common.overrides(None))?;
            let out = experiments::cmd_naive(cfg)?;
            eprintln!("wrote {}", out.dir.display());
        }
        Command::Calibrated { common, oracle, omega } => {
            let cfg = config::resolve(CommandKind::Calibrated { oracle }, &common.overrides(omega))?;
            let out = experiments::cmd_calibrated(cfg, oracle)?;
            eprintln!("wrote {}", out.dir.display());
        }
        Command::Ablation { which, common } => {
            let (kind, command) = match which {
                AblationArg::StructuralOnly => {
                    (AblationKind::StructuralOnly, CommandKind::AblationStructural)
                }
                AblationArg::ParametricOnly => {
                    (AblationKind::ParametricOnly, CommandKind::AblationParametric)
                }
            };
            let cfg = config::resolve(command, &common.overrides(None))?;
            let out = experiments::cmd_ablation(cfg, kind)?;
            eprintln!("wrote {}", out.dir().display());
        }
        Command::Verify { common, report_path } => {
            let cfg = config::resolve(CommandKind::Verify, &common.overrides(None))?;
            let out = experiments::cmd_verify(cfg, report_path)?;
            eprintln!("report at {}", out.report_path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
