//! `mtf`: experiment runner for the 2D local multi-trace library. Runs
//! declarative experiment configs, prints built-in presets, and validates
//! configurations without running them.

mod config;
mod plot;
mod runner;

use clap::{Parser, Subcommand};
use config::{preset, ExperimentConfig, PRESET_NAMES};
use runner::{CliError, Runner};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "mtf", version, about = "Local multi-trace experiments for 2D Helmholtz transmission problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write artifacts plus a manifest.
    Run {
        /// Path to the experiment config JSON.
        config: PathBuf,
        /// Output directory (overrides the config's `output` field).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of (alpha, h) grid points to process concurrently.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
    /// Print a built-in preset config as JSON.
    Preset {
        /// One of: fig2, fig3a, fig3b, fig4, fig5a, fig5b, fig5c.
        name: String,
    },
    /// Validate a config (parse, check invariants, build the geometry)
    /// without running any task.
    Verify {
        /// Path to the experiment config JSON.
        config: PathBuf,
    },
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    ExperimentConfig::from_json(&text).map_err(CliError::Validation)
}

fn real_main() -> Result<(), CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, parallel } => {
            let cfg = load_config(&config)?;
            let out_dir = out
                .or_else(|| cfg.output.clone().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("mtf-out"));
            let manifest = Runner::new(cfg, &out_dir)?.run(parallel.max(1))?;
            println!(
                "wrote {} artifacts to {} (manifest: run_manifest.json)",
                manifest.artifacts.len(),
                out_dir.display()
            );
            Ok(())
        }
        Command::Preset { name } => match preset(&name) {
            Some(cfg) => {
                println!("{}", serde_json::to_string_pretty(&cfg).unwrap());
                Ok(())
            }
            None => Err(CliError::Validation(format!(
                "unknown preset '{name}' (available: {})",
                PRESET_NAMES.join(", ")
            ))),
        },
        Command::Verify { config } => {
            let cfg = load_config(&config)?;
            for &h in &cfg.h {
                let part = cfg.partition(h).map_err(CliError::Validation)?;
                let mesh = part.mesh().map_err(|e| CliError::Validation(e.to_string()))?;
                let dim: usize = mesh.boundaries.iter().map(|b| 2 * b.nodes.len()).sum();
                println!(
                    "h = {h}: {} panels, multi-trace dimension {dim}",
                    mesh.panels.len()
                );
            }
            println!("config ok");
            Ok(())
        }
    }
}

fn main() {
    if let Err(e) = real_main() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
