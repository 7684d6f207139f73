use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use banditlab::harness::verify::{run_suite, SUITES};
use banditlab::harness::{resolve_seed, run_experiment, with_workers, write_outputs, ExperimentConfig, OutputFormat};

#[derive(Parser)]
#[command(
    name = "banditlab",
    version,
    about = "Linear bandit experiments: spectral diagnostics, norm estimation, clustering"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Output directory (default: the config's `out`, else ./results/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores). Results do not depend on it.
        #[arg(long)]
        workers: Option<usize>,
        /// Master seed; overrides BANDITLAB_SEED and the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "csv", value_parser = ["csv", "csv+svg"])]
        format: String,
    },
    /// Run an acceptance suite and print one line per check.
    Verify {
        /// Suite name, or `all`.
        suite: String,
    },
}

fn run(config: PathBuf, out: Option<PathBuf>, workers: Option<usize>, seed: Option<u64>, format: &str) -> Result<()> {
    let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
    let mut cfg = ExperimentConfig::parse(&text).with_context(|| format!("in {}", config.display()))?;
    let env = std::env::var("BANDITLAB_SEED").ok();
    cfg.seed = resolve_seed(seed, env.as_deref(), cfg.seed)?;
    let format = OutputFormat::parse(format)?;
    let dir = out
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("results").join(&cfg.name));

    let output = with_workers(workers, || run_experiment(&cfg, format))??;
    for w in &output.warnings {
        eprintln!("warning: {w}");
    }
    let written = write_outputs(&dir, &output).with_context(|| format!("writing to {}", dir.display()))?;
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn verify(suite: &str) -> Result<bool> {
    let checks = run_suite(suite)?;
    for c in &checks {
        println!("{}", c.line());
    }
    Ok(checks.iter().all(|c| c.pass))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            workers,
            seed,
            format,
        } => run(config, out, workers, seed, &format).map(|_| true),
        Command::Verify { suite } => verify(&suite),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.to_string().contains("unknown suite") {
                eprintln!(
                    "suites: all, {}",
                    SUITES.iter().map(|s| s.0).collect::<Vec<_>>().join(", ")
                );
            }
            ExitCode::from(2)
        }
    }
}
