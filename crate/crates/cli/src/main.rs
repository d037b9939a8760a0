//! `bbs`: command-line front end.
//!
//! Parameters are `key=value` pairs, read from `--config <file>` and then from
//! the command line (later wins). `BBS_SEED` overrides the configured seed;
//! `--seed` overrides both. Every run prints its effective configuration,
//! defaults included, as a `# key=value` header.

mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "bbs", version, about = "Box-ball system simulator and experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Key-value config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for CSV and report files; without it everything goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub replicas: Option<usize>,
    /// Worker threads for replica pools (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Test significance level.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Space-time evolution of a window.
    Evolve(Params),
    /// Sample a configuration with its stationary carrier.
    Sample(Params),
    /// Current (T^k W)_0 of a stationary sample.
    Current(Params),
    /// FIFO and LIFO tagged-particle runs.
    Tagged(Params),
    /// Block-law tests of eta vs T eta, eta vs its reversal, W vs its reversal.
    InvarianceTest(Params),
    /// Reconstruct a configuration from its current and compare with evolution.
    Reconstruct(Params),
    /// Rate function of the current or the LIFO tagged particle.
    RateFunction(Params),
    /// Closed-form constants.
    Constants(Params),
    /// Continuum invariance and lattice scaling experiments.
    Scaling(Params),
    /// Full acceptance suite.
    Selftest(Params),
}

#[derive(Args, Debug)]
struct Params {
    /// key=value overrides.
    params: Vec<String>,
    #[command(flatten)]
    common: Common,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, p) = match cli.command {
        Command::Evolve(p) => ("evolve", p),
        Command::Sample(p) => ("sample", p),
        Command::Current(p) => ("current", p),
        Command::Tagged(p) => ("tagged", p),
        Command::InvarianceTest(p) => ("invariance-test", p),
        Command::Reconstruct(p) => ("reconstruct", p),
        Command::RateFunction(p) => ("rate-function", p),
        Command::Constants(p) => ("constants", p),
        Command::Scaling(p) => ("scaling", p),
        Command::Selftest(p) => ("selftest", p),
    };
    match run::run(name, &p.params, &p.common) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
