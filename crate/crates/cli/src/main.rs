use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fellerfeynman::run::{run_converge, run_evolve, run_mc, run_validate};
use fellerfeynman::{CliError, ExperimentConfig, Result};

#[derive(Parser)]
#[command(
    name = "fellerfeynman",
    version,
    about = "Chernoff product-formula experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output` in the config
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cap on worker threads
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides `mc.seed`; also seeds the validation point sets
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Iterate [F(t/n)]^n φ once
    Evolve,
    /// Error table over `n_list`
    Converge,
    /// Monte Carlo estimates
    Mc,
    /// Check the symbol and step recipe
    Validate,
}

fn run(cli: Cli) -> Result<()> {
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(CliError::config("--threads", "must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::config("--threads", e.to_string()))?;
    }
    let path = cli
        .config
        .ok_or_else(|| CliError::config("--config", "required"))?;
    let mut cfg = ExperimentConfig::load(&path)?;
    if let (Some(seed), Some(mc)) = (cli.seed, cfg.mc.as_mut()) {
        mc.seed = seed;
    }
    let out = cfg.output_dir(cli.out.as_deref());
    let written = match cli.command {
        Command::Evolve => run_evolve(&cfg, &out)?,
        Command::Converge => run_converge(&cfg, &out)?,
        Command::Mc => run_mc(&cfg, &out)?,
        Command::Validate => {
            let seed = cli.seed.or(cfg.mc.as_ref().map(|m| m.seed)).unwrap_or(0);
            run_validate(&cfg, &out, seed)?
        }
    };
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
