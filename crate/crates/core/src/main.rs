use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use irsdet::experiment::{self, ExperimentConfig};
use irsdet::Error;

/// Detection through an active IRS: sweeps, benchmark schemes and Monte Carlo checks.
#[derive(Debug, Parser)]
#[command(name = "irsdet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment and write its results.
    Run {
        /// TOML configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Start from a named preset (fig2, fig3, fig4).
        #[arg(long)]
        preset: Option<String>,
        /// Output path; `.json` selects JSON, anything else CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Monte Carlo trials per row (0 disables simulation).
        #[arg(long)]
        trials: Option<usize>,
    },
    /// List the built-in presets.
    Presets,
}

const WORKERS_ENV: &str = "IRSDET_WORKERS";

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::InvalidParameter { .. } => 2,
        Error::Infeasible(_) | Error::EmptyFeasibleRegion(_) | Error::DegenerateDesign(_) => 3,
        _ => 1,
    }
}

fn configure_workers() -> Result<(), Error> {
    let Ok(value) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let workers: usize = value.parse().ok().filter(|w| *w > 0).ok_or_else(|| {
        Error::Config(format!(
            "{WORKERS_ENV} must be a positive integer, got {value:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn run(
    config: Option<PathBuf>,
    preset: Option<String>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    trials: Option<usize>,
) -> Result<(), Error> {
    configure_workers()?;
    let mut cfg = match (&config, &preset) {
        (Some(path), _) => ExperimentConfig::from_path(path, preset.as_deref())?,
        (None, Some(name)) => experiment::preset(name)?,
        (None, None) => {
            return Err(Error::Config(
                "either --config or --preset is required".into(),
            ));
        }
    };
    if let Some(out) = out {
        cfg.output = out;
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(trials) = trials {
        cfg.trials = trials;
    }
    cfg.validate()?;
    let rows = experiment::run(&cfg)?;
    experiment::write_output(&rows, &cfg.output)?;
    eprintln!("wrote {} rows to {}", rows.len(), cfg.output.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            preset,
            out,
            seed,
            trials,
        } => run(config, preset, out, seed, trials),
        Command::Presets => {
            for (name, cfg) in experiment::presets() {
                println!(
                    "{name}: {} sweep points x {} schemes -> {}",
                    cfg.points().len(),
                    cfg.schemes.len(),
                    cfg.output.display()
                );
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
