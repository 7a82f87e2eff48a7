//! Command-line runner for the ping-pong QKD simulator.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pingpong_cli::config::{Preset, Scenario, ScenarioConfig};
use pingpong_cli::scenarios;

#[derive(Parser)]
#[command(
    name = "pingpong",
    about = "Monte Carlo simulator of the ping-pong QKD protocol with polarization-entangled photon pairs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// TOML scenario config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed for all randomness.
    #[arg(long)]
    seed: Option<u64>,
    /// Replace the protocol section with a standard preset.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Output directory for emitted files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = automatic); results do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Transmit a random key and report category statistics.
    Transmit {
        #[command(flatten)]
        common: CommonArgs,
        /// Key length in bits.
        #[arg(long)]
        bits: Option<u64>,
        /// Confirmation mode: pulses continue until this many coincidences
        /// confirm each bit.
        #[arg(long)]
        confirmation: Option<u64>,
    },
    /// Scan the translation stage and emit both coincidence curves.
    Homscan {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
    },
    /// Run control-mode pulses and the exactly-one-click check.
    Control {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        runs: Option<u64>,
    },
    /// Simulate the configured eavesdropping strategy.
    Attack {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        runs: Option<u64>,
    },
    /// One-time-pad the bundled image with a transmitted key.
    Otp {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Fit source and analyzer parameters to the operating-point table.
    Calibrate {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn build_config(scenario: Scenario, common: &CommonArgs) -> anyhow::Result<ScenarioConfig> {
    let mut config = match &common.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    config.scenario = scenario;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(preset) = common.preset {
        config.protocol = preset.protocol(config.seed);
    }
    if let Some(out) = &common.out {
        config.out_dir = out.clone();
    }
    if let Some(workers) = common.workers {
        config.workers = workers;
    }
    Ok(config)
}

fn run(cli: Cli) -> anyhow::Result<String> {
    let config = match &cli.command {
        Command::Transmit {
            common,
            bits,
            confirmation,
        } => {
            let mut c = build_config(Scenario::Transmit, common)?;
            if let Some(bits) = bits {
                c.n_bits = *bits;
            }
            if confirmation.is_some() {
                c.confirmation_target = *confirmation;
            }
            c
        }
        Command::Homscan { common, from, to, step } => {
            let mut c = build_config(Scenario::Homscan, common)?;
            if let Some(v) = from {
                c.homscan.start_um = *v;
            }
            if let Some(v) = to {
                c.homscan.stop_um = *v;
            }
            if let Some(v) = step {
                c.homscan.step_um = *v;
            }
            c
        }
        Command::Control { common, runs } => {
            let mut c = build_config(Scenario::Control, common)?;
            if let Some(runs) = runs {
                c.n_runs = *runs;
            }
            c
        }
        Command::Attack { common, runs } => {
            let mut c = build_config(Scenario::Attack, common)?;
            if let Some(runs) = runs {
                c.n_runs = *runs;
            }
            c
        }
        Command::Otp { common } => build_config(Scenario::Otp, common)?,
        Command::Calibrate { common } => build_config(Scenario::Calibrate, common)?,
    };
    scenarios::run_scenario(&config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
