//! Command-line front end for the single-pixel imaging simulator.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spi_runner::config::ExperimentConfig;
use spi_runner::jobs;

#[derive(Parser)]
#[command(
    name = "spisim",
    version,
    about = "Photon-counting single-pixel imaging simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruct one image per sweep cell and score every cell.
    Grid(RunArgs),
    /// Sample SNR distributions over the noise x pulse-width sweep.
    Surface(RunArgs),
    /// Sample SNR versus noise level, adding an ideal-heralding series.
    Curves(RunArgs),
    /// Rebuild an image from a stored measurement table.
    Reconstruct(ReconstructArgs),
    /// Write every measurement mask as PGM plus a pairing manifest.
    ExportPatterns(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Config file of `key = value` lines; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Statistics source: `analytic` or `event`.
    #[arg(long)]
    mode: Option<String>,
    /// Monte Carlo trials per sweep cell.
    #[arg(long)]
    trials: Option<u32>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Publication scale: 32x32 frame, 350 pattern pairs, 5000 trials.
    #[arg(long)]
    full_scale: bool,
}

impl RunArgs {
    /// Defaults, then the config file, then the scale preset, then
    /// individual flags.
    fn build(&self) -> spi_core::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if self.full_scale {
            cfg.rows = 32;
            cfg.cols = 32;
            cfg.pair_count = 350;
            cfg.trials = 5000;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(mode) = &self.mode {
            cfg.set("mode", mode)?;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct ReconstructArgs {
    /// Config file describing the pattern basis the table was measured with.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Measurement table written by the grid job.
    #[arg(long)]
    input: PathBuf,
    /// Output PGM path.
    #[arg(long, default_value = "reconstructed.pgm")]
    out: PathBuf,
}

fn run(cli: Cli) -> spi_core::Result<()> {
    match cli.command {
        Command::Grid(args) => print_files(&jobs::run_image_grid(&args.build()?)?),
        Command::Surface(args) => print_files(&[jobs::run_snr_surface(&args.build()?)?]),
        Command::Curves(args) => print_files(&[jobs::run_snr_curves(&args.build()?)?]),
        Command::ExportPatterns(args) => print_files(&jobs::run_export_patterns(&args.build()?)?),
        Command::Reconstruct(args) => {
            let cfg = match &args.config {
                Some(path) => ExperimentConfig::from_file(path)?,
                None => ExperimentConfig::default(),
            };
            cfg.validate()?;
            jobs::run_reconstruct(&cfg, &args.input, &args.out)?;
            print_files(&[args.out]);
        }
    }
    Ok(())
}

fn print_files(files: &[PathBuf]) {
    for file in files {
        println!("{}", file.display());
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
