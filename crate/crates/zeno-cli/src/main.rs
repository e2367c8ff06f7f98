use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use zeno_core::scenario::{self, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "zeno",
    about = "Measurement-induced Zeno-gate scenario runner",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario from a configuration file.
    Run {
        /// TOML configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for sweep cells (falls back to ZENO_WORKERS, then
        /// to one thread per core).
        #[arg(long)]
        workers: Option<usize>,
        /// Append suggested plot commands as CSV comments.
        #[arg(long)]
        gnuplot_hints: bool,
    },
    /// Check a configuration without running it: schema, units, memory
    /// estimate, and operating-regime classification.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// List available scenarios and their keys.
    ListScenarios,
}

fn env_workers() -> Option<usize> {
    std::env::var("ZENO_WORKERS").ok()?.parse().ok()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            workers,
            gnuplot_hints,
        } => {
            let cfg = match ScenarioConfig::from_path(&config) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            };
            let workers = workers.or_else(env_workers);
            match scenario::run_scenario(&cfg, out.as_deref(), workers, gnuplot_hints) {
                Ok(summary) => {
                    for f in &summary.files {
                        println!("wrote {}", f.display());
                    }
                    println!("wrote {}", summary.sidecar.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Validate { config } => {
            let cfg = match ScenarioConfig::from_path(&config) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            };
            match scenario::validate(&cfg) {
                Ok(report) => {
                    if let Some(bytes) = report.memory_bytes {
                        println!(
                            "state memory estimate: {:.1} MiB",
                            bytes as f64 / (1024.0 * 1024.0)
                        );
                    }
                    if let Some(regime) = report.regime {
                        println!("operating regime: {regime}");
                    }
                    if report.ok() {
                        println!("configuration OK");
                        for line in &report.echo {
                            println!("  {line}");
                        }
                        ExitCode::SUCCESS
                    } else {
                        println!("violations:");
                        for v in &report.violations {
                            println!("  - {v}");
                        }
                        ExitCode::FAILURE
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::ListScenarios => {
            for def in scenario::catalog() {
                println!("{:8} {}", def.name, def.summary);
                for key in def.keys {
                    let default = key
                        .default
                        .map(|d| format!(" (default {d})"))
                        .unwrap_or_else(|| " (required)".to_string());
                    println!("    {:16} {}{}", key.name, key.help, default);
                }
            }
            ExitCode::SUCCESS
        }
    }
}
