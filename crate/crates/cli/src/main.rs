use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use opinion_kinetics_cli::commands::{cmd_compare_oracle, cmd_run, cmd_steady};
use opinion_kinetics_cli::{load_config, CliError, Scenario};

#[derive(Parser)]
#[command(name = "opinion-kinetics", version, about = "Follower/leader opinion dynamics with controlled leaders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate and write moments.csv and hist_<t>.csv.
    Run(Common),
    /// Compare simulated means with the moment equations.
    CompareOracle(Common),
    /// Compare a long run with the closed-form stationary densities.
    Steady(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Dotted-path override, e.g. `simulation.seed=7` or `leaders.0.psi=0.8`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn scenario(c: &Common) -> Result<Scenario, CliError> {
    load_config(&c.config, &c.overrides)?.validate()
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(c) => {
            let s = scenario(&c)?;
            let outputs = cmd_run(&s, &c.out)?;
            for (i, o) in outputs.iter().enumerate() {
                println!(
                    "replica {i}: {} steps, {} interactions, rejection fraction {}",
                    o.steps,
                    o.tally.attempted,
                    o.tally.rejection_fraction()
                );
            }
        }
        Command::CompareOracle(c) => {
            let s = scenario(&c)?;
            let r = cmd_compare_oracle(&s, &c.out)?;
            println!(
                "max |m_F - oracle| = {:.3e}, max |m_L - oracle| = {:.3e}, tolerance {}",
                r.follower_gap, r.leader_gap, r.tolerance
            );
            if !r.passed() {
                return Err(CliError::OracleMismatch(format!(
                    "gaps {:.3e} / {:.3e} exceed {}",
                    r.follower_gap, r.leader_gap, r.tolerance
                )));
            }
        }
        Command::Steady(c) => {
            let s = scenario(&c)?;
            let r = cmd_steady(&s, &c.out)?;
            println!(
                "followers: b = {}, L1 = {:.4}, residual = {:.3e}",
                r.follower.b(),
                r.follower_l1,
                r.follower_residual
            );
            println!(
                "leaders:   b = {}, L1 = {:.4}, residual = {:.3e}",
                r.leader.b(),
                r.leader_l1,
                r.leader_residual
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
