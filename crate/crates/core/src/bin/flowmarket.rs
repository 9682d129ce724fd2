use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use flowmarket::experiments::{emit, run, summarize, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "flowmarket",
    version,
    about = "Equilibria of resource markets over capacitated flow networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one of the four reproduction experiments and write its artifacts.
    Exp {
        /// Experiment id (1-4).
        #[arg(value_parser = clap::value_parser!(u8).range(1..=4))]
        id: u8,
        /// Random seed; overrides any seed in the config file.
        #[arg(long, env = "FLOWMARKET_SEED")]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// JSON file whose fields override the built-in defaults.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let Command::Exp {
        id,
        seed,
        out,
        config,
    } = Cli::parse().command;
    let result = (|| {
        let mut cfg = match &config {
            Some(path) => ExperimentConfig::load(id, path)?,
            None => ExperimentConfig::defaults(id)?,
        };
        if let Some(seed) = seed {
            cfg.seed = seed;
        }
        let report = run(&cfg)?;
        emit(&report, &out)?;
        Ok::<_, flowmarket::Error>(report)
    })();
    match result {
        Ok(report) => {
            let _ = summarize(&report, &mut std::io::stdout().lock());
            println!("  artifacts in {}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
