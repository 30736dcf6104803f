//! Thermoacoustic tomography workbench: precompute reconstruction filters
//! for an acquisition geometry, simulate circular-mean data, and reconstruct
//! images.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use tato::cli;
use tato::config::RunConfig;
use tato::Error;

#[derive(Parser)]
#[command(
    name = "tato",
    about = "Thermoacoustic tomography with detectors on an open circular arc"
)]
struct Cli {
    /// Plain key=value config file; omitted keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a single config key, e.g. --set grid_n=65 (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the density pairs on the polar frequency grid and cache them.
    Precompute,
    /// Simulate circular-mean projections of the configured phantom.
    Simulate,
    /// Reconstruct an image from cached densities and a projections file.
    Reconstruct,
    /// Report the plane-wave residual of a cached density pair.
    PlanewaveCheck {
        /// Radial frequency of the plane wave.
        #[arg(long)]
        lambda: f64,
        /// Propagation angle in radians.
        #[arg(long)]
        theta: f64,
    },
    /// Render the configured phantom on the reconstruction grid.
    PhantomRender,
    /// Print error metrics between two image files over the ROI.
    Compare {
        image_a: PathBuf,
        image_b: PathBuf,
    },
}

fn build_config(cli: &Cli) -> tato::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for item in &cli.overrides {
        let (key, value) = item.split_once('=').ok_or_else(|| {
            Error::Config(format!("--set expects KEY=VALUE, got {item:?}"))
        })?;
        cfg.set(key.trim(), value.trim())?;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> tato::Result<()> {
    if let Ok(threads) = std::env::var("TATO_THREADS") {
        let n: usize = threads
            .parse()
            .map_err(|_| Error::Config(format!("TATO_THREADS={threads:?} is not a count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool setup failed: {e}")))?;
    }
    match &cli.command {
        Command::Compare { image_a, image_b } => cli::cmd_compare(image_a, image_b),
        command => {
            let cfg = build_config(cli)?;
            match command {
                Command::Precompute => cli::cmd_precompute(&cfg),
                Command::Simulate => cli::cmd_simulate(&cfg),
                Command::Reconstruct => cli::cmd_reconstruct(&cfg),
                Command::PlanewaveCheck { lambda, theta } => {
                    cli::cmd_planewave_check(&cfg, *lambda, *theta)
                }
                Command::PhantomRender => cli::cmd_phantom_render(&cfg),
                Command::Compare { .. } => unreachable!(),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::GeometryHashMismatch { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
