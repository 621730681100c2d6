use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use diffwave::verify::FaultHooks;
use diffwave_cli::commands::{cmd_profile, cmd_simulate, cmd_sweep, cmd_verify};
use diffwave_cli::error::exit;
use diffwave_cli::{CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "diffwave", version, about = "Diffusion-wave stability experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config or a previously written manifest.toml.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override every random seed in the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the travelling profile and tabulate the diffusion wave.
    Profile(Common),
    /// Run the perturbation problem and its analysis.
    Simulate(Common),
    /// Run the verification suite.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Perturb the second-difference stencil to exercise fault detection.
        #[arg(long, hide = true)]
        fault_stencil: bool,
    },
    /// Run simulate over the values of one config axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Worker threads; overrides sweep.workers.
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.override_seed(seed);
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Profile(c) => {
            let cfg = load(&c)?;
            cmd_profile(&cfg, &c.out)?;
        }
        Command::Simulate(c) => {
            let cfg = load(&c)?;
            cmd_simulate(&cfg, &c.out)?;
        }
        Command::Verify { common, fault_stencil } => {
            let cfg = load(&common)?;
            let report = cmd_verify(&cfg, &common.out, FaultHooks { broken_stencil: fault_stencil })?;
            if !report.passed() {
                return Err(CliError::Verify(report.failures().map(|c| c.name.as_str()).collect::<Vec<_>>().join(", ")));
            }
        }
        Command::Sweep { common, workers } => {
            let cfg = load(&common)?;
            let workers = workers.unwrap_or(cfg.sweep.workers);
            let report = cmd_sweep(&cfg, &common.out, workers)?;
            let failed = report.rows.iter().filter(|r| r.error.is_some()).count();
            if failed > 0 {
                log::warn!("{failed} of {} sweep rows failed", report.rows.len());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DIFFWAVE_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(exit::SUCCESS as u8),
        Err(e) => {
            eprintln!("diffwave: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
