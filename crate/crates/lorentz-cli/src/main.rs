//! `lorentz`: configuration-driven experiment runner.
//!
//! Usage: `lorentz <command> [--config path] [--eps a,b,c] [--seed n] [--out dir] [command flags]`.
//! Exit codes: 0 success, 2 configuration error, 3 I/O error.

mod commands;
mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use config::ExperimentConfig;
use output::{CliError, RunOutput};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "lorentz",
    version,
    about = "Experiments for the periodic quantum Lorentz gas in the kinetic scaling"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file; defaults apply to missing sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Comma-separated, strictly decreasing ε ladder.
    #[arg(long, global = true, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate T^ε and report block norms per snapshot.
    Simulate,
    /// Sampled validation of an oscillatory bound.
    ValidateBounds {
        /// phi-st, first-order, resonant-pair or nonresonant-pair.
        #[arg(long)]
        lemma: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// c_δ and A_η membership on seeded offsets.
    Divisors {
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Probe norms of the smoothing operators along the ν list.
    Smoothing,
    /// Probe norms of the remainder along the ε ladder and |t−s| list.
    Remainder,
    /// Pairing gaps between simulated fields and the linear Boltzmann limit.
    BoltzmannCompare,
    /// Resonance lines n·k = |n|² in a square view box (CSV and SVG).
    ResonanceMap {
        #[arg(long)]
        n_radius: Option<i64>,
        #[arg(long = "box")]
        box_half: Option<f64>,
    },
    /// The ξ = 0 observable of simulated fields along the ε ladder.
    Observable,
    /// Resonant observable term for a single-mode potential.
    SingleMode,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::ValidateBounds { .. } => "validate-bounds",
            Command::Divisors { .. } => "divisors",
            Command::Smoothing => "smoothing",
            Command::Remainder => "remainder",
            Command::BoltzmannCompare => "boltzmann-compare",
            Command::ResonanceMap { .. } => "resonance-map",
            Command::Observable => "observable",
            Command::SingleMode => "single-mode",
        }
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<ExperimentConfig>(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    let name = cli.command.name();
    if let Some(c) = &cfg.command {
        if c != name {
            return Err(CliError::Config(format!(
                "configuration is for '{c}', not '{name}'"
            )));
        }
    }
    if let Some(eps) = &cli.common.eps {
        cfg.eps_list = eps.clone();
        if let Some(first) = eps.first() {
            cfg.sim.eps = *first;
        }
    }
    if let Some(seed) = cli.common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.common.out {
        cfg.output.dir = out.display().to_string();
    }
    match &cli.command {
        Command::ValidateBounds { lemma, samples } => {
            if let Some(l) = lemma {
                cfg.bounds.lemma = l.clone();
            }
            if let Some(s) = samples {
                cfg.bounds.samples = *s;
            }
        }
        Command::Divisors { samples: Some(s) } => cfg.bounds.samples = *s,
        Command::ResonanceMap { n_radius, box_half } => {
            if let Some(n) = n_radius {
                cfg.resonance.n_radius = *n;
            }
            if let Some(b) = box_half {
                cfg.resonance.box_half = *b;
            }
        }
        _ => {}
    }
    cfg.command = Some(name.to_string());
    cfg.validate().map_err(CliError::Config)?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<RunOutput, CliError> {
    let cfg = load(cli)?;
    let out = match cli.command {
        Command::Simulate => commands::simulate(&cfg),
        Command::ValidateBounds { .. } => commands::validate_bounds(&cfg),
        Command::Divisors { .. } => commands::divisors(&cfg),
        Command::Smoothing => commands::smoothing(&cfg),
        Command::Remainder => commands::remainder(&cfg),
        Command::BoltzmannCompare => commands::boltzmann_compare(&cfg),
        Command::ResonanceMap { .. } => commands::resonance_map(&cfg),
        Command::Observable => commands::observable(&cfg),
        Command::SingleMode => commands::single_mode(&cfg),
    }?;
    output::write_all(&cfg, &out)?;
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            println!("{}", out.summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.code())
        }
    }
}
