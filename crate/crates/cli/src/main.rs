//! `curvkit` command-line front-end: exact curvature export, KFAC
//! factors with residuals, and Monte Carlo Fisher convergence sweeps.

mod args;
mod commands;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use args::Common;

#[derive(Parser, Debug)]
#[command(
    name = "curvkit",
    version,
    about = "Exact curvature matrices and KFAC for small MLPs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a full or per-layer curvature matrix as CSV with JSON metadata.
    Curvature {
        #[command(flatten)]
        common: Common,
        /// Position of a linear layer in the network; full matrix if omitted.
        #[arg(long)]
        layer: Option<usize>,
        /// Also write a PGM heatmap.
        #[arg(long)]
        heatmap: bool,
    },
    /// Write KFAC factors for every linear layer and their residuals.
    Kfac {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        heatmap: bool,
    },
    /// Residuals of the Monte Carlo Fisher to the GGN over sample counts.
    McSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
        m_grid: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
        seeds: Vec<u64>,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Curvature {
            common,
            layer,
            heatmap,
        } => commands::curvature(&common, layer, heatmap),
        Command::Kfac { common, heatmap } => commands::kfac(&common, heatmap),
        Command::McSweep {
            common,
            m_grid,
            seeds,
        } => commands::mc_sweep(&common, &m_grid, &seeds),
    }
}

/// 3 for a numeric contract violation, 2 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<curvkit::Error>() {
        Some(curvkit::Error::Contract(_)) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
