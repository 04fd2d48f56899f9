//! `coexist`: closed-form metrics, split optimization, simulation and
//! adaptive scheme selection from a JSON config.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coexist_core::{Method, Scheme};

#[derive(Parser, Debug)]
#[command(name = "coexist", version, about = "MC/eMBB uplink coexistence: AoI metrics, RSMA split optimization, simulation and scheme selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON configuration file.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Overrides both the simulation and the optimizer seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct SplitArgs {
    /// RSMA power split (overrides the config).
    #[arg(long, requires = "lambda")]
    omega: Option<f64>,
    /// RSMA rate split (overrides the config).
    #[arg(long, requires = "omega")]
    lambda: Option<f64>,
    /// Optimize the RSMA split instead of taking it from flags or config.
    #[arg(long, conflicts_with = "omega")]
    optimize: bool,
    /// Optimizer used by --optimize.
    #[arg(long, value_enum, default_value_t = MethodArg::Grid)]
    method: MethodArg,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum MethodArg {
    Grid,
    Gwo,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Grid => Method::Grid,
            MethodArg::Gwo => Method::Gwo,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum LookupMethod {
    Grid,
    Gwo,
    Both,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum SchemeArg {
    Punc,
    Noma,
    Rsma,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Scheme {
        match s {
            SchemeArg::Punc => Scheme::Punc,
            SchemeArg::Noma => Scheme::Noma,
            SchemeArg::Rsma => Scheme::Rsma,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form metrics of one scheme at one SNR gap.
    Metrics {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        /// SNR gap in dB; defaults to the gap of the configured budgets.
        #[arg(long, allow_hyphen_values = true)]
        gamma_db: Option<f64>,
        /// Also simulate and report estimates with standard errors.
        #[arg(long)]
        simulate: bool,
        #[command(flatten)]
        split: SplitArgs,
    },
    /// Sweep the SNR gap, extract thresholds and build the adaptive curve.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Simulate every sweep point and flag 3-standard-error agreement.
        #[arg(long)]
        validate: bool,
        /// Bisect thresholds to 1e-3 dB.
        #[arg(long)]
        refine: bool,
        /// Optimizer for the per-gap RSMA split.
        #[arg(long, value_enum, default_value_t = MethodArg::Grid)]
        method: MethodArg,
    },
    /// Tabulate optimal RSMA splits over the lookup grid.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = LookupMethod::Grid)]
        method: LookupMethod,
        /// Single SNR gap instead of the configured lookup grid.
        #[arg(long, allow_hyphen_values = true)]
        gamma_db: Option<f64>,
    },
    /// Monte-Carlo run of one scheme with a geometric fit of the peak AoI.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        #[arg(long, allow_hyphen_values = true)]
        gamma_db: Option<f64>,
        #[command(flatten)]
        split: SplitArgs,
    },
}

fn configure_threads() {
    let Ok(v) = std::env::var("COEXIST_THREADS") else {
        return;
    };
    match v.parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("could not size the thread pool: {e}");
            }
        }
        _ => log::warn!("ignoring COEXIST_THREADS={v:?}: expected a positive integer"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    configure_threads();
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commands::CliError;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn negative_gaps_parse() {
        let cli = Cli::try_parse_from(["coexist", "metrics", "--config", "c.json", "--scheme", "noma", "--gamma-db", "-12.5"]).unwrap();
        match cli.command {
            Command::Metrics { gamma_db, .. } => assert_eq!(gamma_db, Some(-12.5)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn omega_needs_lambda() {
        assert!(Cli::try_parse_from(["coexist", "metrics", "--config", "c", "--scheme", "rsma", "--omega", "0.5"]).is_err());
    }

    #[test]
    fn errors_map_to_exit_codes() {
        assert_eq!(CliError::Parse("x".into()).exit_code(), 2);
        assert_eq!(CliError::Invariant("x".into()).exit_code(), 3);
        assert_eq!(CliError::MissingSplit.exit_code(), 4);
    }
}
