use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

use gwt_cli::config::Config;
use gwt_cli::runner;

/// Gaussian wave packet transform solvers for the semi-classical
/// Schrodinger equation with vector potentials.
#[derive(Parser)]
#[command(name = "gwt", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Experiment description file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress progress and warning chatter.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the packet ODEs and evolve the transformed field.
    RunGwt(CommonArgs),
    /// Produce a benchmark solution with the direct SL-TS solver.
    RunReference(CommonArgs),
    /// Time-convergence study over the configured dt sweep.
    ConvergeTime {
        #[command(flatten)]
        common: CommonArgs,
        /// Reference snapshot to reuse (computed and saved when absent).
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Spatial-convergence study over the configured mesh sweep.
    ConvergeSpace {
        #[command(flatten)]
        common: CommonArgs,
        /// Fine-run w snapshot to reuse (computed and saved when absent).
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Run and emit the position-expectation time series.
    Observables(CommonArgs),
}

fn out_dir(cfg: &Config, common: &CommonArgs) -> PathBuf {
    common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output.dir))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::RunGwt(common) => {
            let cfg = Config::load(&common.config)?;
            runner::run_gwt(&cfg, &out_dir(&cfg, &common), common.quiet)?;
        }
        Command::RunReference(common) => {
            let cfg = Config::load(&common.config)?;
            runner::run_reference_cmd(&cfg, &out_dir(&cfg, &common), common.quiet)?;
        }
        Command::ConvergeTime { common, reference } => {
            let cfg = Config::load(&common.config)?;
            let path = runner::converge_time(
                &cfg,
                reference.as_deref(),
                &out_dir(&cfg, &common),
                common.quiet,
            )?;
            if !common.quiet {
                println!("error table written to {}", path.display());
            }
        }
        Command::ConvergeSpace { common, reference } => {
            let cfg = Config::load(&common.config)?;
            let path = runner::converge_space(
                &cfg,
                reference.as_deref(),
                &out_dir(&cfg, &common),
                common.quiet,
            )?;
            if !common.quiet {
                println!("error table written to {}", path.display());
            }
        }
        Command::Observables(common) => {
            let cfg = Config::load(&common.config)?;
            runner::observables_cmd(&cfg, &out_dir(&cfg, &common), common.quiet)?;
        }
    }
    Ok(())
}
