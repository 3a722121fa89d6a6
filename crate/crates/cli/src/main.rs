//! `gammalab`: build discrete spaces, run the Γ-calculus, curvature, heat,
//! harmonic and maximum-principle experiments, and emit reports.
//!
//! Exit status: 0 when every check passed, 2 when checks ran and found
//! violations (details in the report files), 1 on any execution error.

mod checks;
mod config;
mod flow;
mod plotdata;
mod space_cmd;
mod sweep;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "gammalab", version, about = "Discrete Γ-calculus experiments on weighted graphs")]
struct Cli {
    /// JSON config whose keys mirror the flags of the chosen subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for parallel sweeps and profiles.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or inspect space files.
    #[command(subcommand)]
    Space(space_cmd::SpaceCommand),
    /// Exact identities and inequalities of the Γ-calculus.
    #[command(subcommand)]
    Gamma(checks::GammaCommand),
    /// Pointwise curvature-dimension bounds.
    #[command(subcommand)]
    Curvature(checks::CurvatureCommand),
    /// Heat flow and the Li-Yau estimates.
    #[command(subcommand)]
    Heat(flow::HeatCommand),
    /// Poisson solves and the Yau estimate.
    #[command(subcommand)]
    Harmonic(flow::HarmonicCommand),
    /// Elliptic and parabolic maximum-principle probes.
    #[command(subcommand)]
    Maxprin(checks::MaxprinCommand),
    /// Refinement and parameter sweeps with fitted orders.
    Sweep(sweep::SweepArgs),
    /// Plot data bundles and bound evaluation.
    #[command(subcommand)]
    Report(plotdata::ReportCommand),
}

/// Result of a subcommand: whether all checks passed, and a JSON summary
/// echoed to stdout.
pub struct Outcome {
    pub passed: bool,
    pub summary: Value,
}

fn run(cli: Cli) -> Result<Outcome> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global()?;
    }
    let cfg = cli.config.as_deref().map(config::load).transpose()?;
    let cfg = cfg.as_ref();
    match cli.command {
        Command::Space(c) => space_cmd::run(c, cfg),
        Command::Gamma(c) => checks::run_gamma(c, cfg),
        Command::Curvature(c) => checks::run_curvature(c, cfg),
        Command::Heat(c) => flow::run_heat(c, cfg),
        Command::Harmonic(c) => flow::run_harmonic(c, cfg),
        Command::Maxprin(c) => checks::run_maxprin(c, cfg),
        Command::Sweep(a) => sweep::run(a, cfg),
        Command::Report(c) => plotdata::run(c, cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(outcome) => {
            let text = serde_json::to_string_pretty(&outcome.summary).unwrap_or_default();
            let _ = writeln!(std::io::stdout(), "{text}");
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
