//! `deltactl simulate|control|verify|asymptotics --config <path>`.
//!
//! Exit codes: 0 success, 1 i/o, 2 configuration, 3 accuracy, 4 no convergence,
//! 5 verification failure, 6 degenerate state.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use deltactl::{Complex64, Error};

use crate::config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("verification failed")]
    VerifyFailed,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 1,
            CliError::VerifyFailed => 5,
            CliError::Core(e) => match e {
                Error::Config(_) | Error::Domain(_) | Error::Degenerate(_) => 2,
                Error::Accuracy(_) | Error::Conditioning { .. } | Error::Fit(_) => 3,
                Error::NoConvergence(_) | Error::DegenerateLinearization { .. } => 4,
                Error::DegenerateState(_) | Error::NoExpansionOrder { .. } | Error::IndeterminatePhase(_) => 6,
                Error::Io(_) | Error::Csv(_) => 1,
            },
        }
    }
}

#[derive(Parser)]
#[command(name = "deltactl", version, about = "Bilinear control of a 3-D point interaction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (INI-style sections, or JSON when the extension is .json).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides output.directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the charge equation for a control and evaluate F.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Sine coefficients c1,c2,...; zero control when omitted.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        coeffs: Option<Vec<f64>>,
    },
    /// Find a control with F(alpha) = target.
    Control {
        #[command(flatten)]
        common: Common,
        /// Target as re,im.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
        target: Vec<f64>,
    },
    /// Run the identity suite and report pass/fail per identity.
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// Small-time expansion of the free charge.
    Asymptotics {
        #[command(flatten)]
        common: Common,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { common, coeffs } => {
            let cfg = RunConfig::load(&common.config)?;
            commands::simulate(&cfg, coeffs.as_deref(), common.out.as_ref())
        }
        Command::Control { common, target } => {
            let cfg = RunConfig::load(&common.config)?;
            let [re, im] = target[..] else {
                return Err(CliError::Config("--target expects re,im".into()));
            };
            commands::control(&cfg, Complex64::new(re, im), common.out.as_ref())
        }
        Command::Verify { common } => {
            let cfg = RunConfig::load(&common.config)?;
            let report = commands::verify(&cfg, common.out.as_ref())?;
            if report.all_pass {
                Ok(())
            } else {
                Err(CliError::VerifyFailed)
            }
        }
        Command::Asymptotics { common } => {
            let cfg = RunConfig::load(&common.config)?;
            commands::asymptotics(&cfg, common.out.as_ref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("deltactl: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
