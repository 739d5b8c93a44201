use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fractsplit::{
    cmd_check_bounds, cmd_convergence, cmd_preset, cmd_simulate, format_verdicts, parse_config,
    CliError, RunConfig,
};

/// Operator-splitting solver for 1D stochastic fractional conservation laws.
#[derive(Parser)]
#[command(name = "fractsplit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo ensemble and emit field/stats CSVs.
    Simulate {
        /// Run-configuration JSON file.
        #[arg(long)]
        config: PathBuf,
        /// Override the configured path count.
        #[arg(long)]
        paths: Option<usize>,
        /// Override the configured root seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid-refinement study: halve dx repeatedly and fit the L1 order.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        /// Number of grids (the base grid halved levels-1 times; >= 4).
        #[arg(long)]
        levels: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a ready-to-edit config for a built-in scenario.
    Preset {
        /// Scenario name (example1 or example2).
        #[arg(long)]
        name: String,
        /// Fractional order in (0, 1).
        #[arg(long)]
        theta: f64,
        /// Where to write the config document.
        #[arg(long, value_name = "FILE")]
        emit_config: PathBuf,
    },
    /// Run the ensemble and verify the sup-norm and expected-TV bounds.
    CheckBounds {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load_config(path: &PathBuf) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)?;
    Ok(parse_config(&text)?)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            config,
            paths,
            seed,
            out,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(p) = paths {
                cfg.n_paths = p;
            }
            if let Some(s) = seed {
                cfg.root_seed = s;
            }
            let out_dir = cmd_simulate(&cfg, out.as_deref())?;
            println!(
                "simulated {} paths over {} steps -> {}",
                cfg.n_paths,
                (cfg.time.horizon / cfg.time.dt).round() as u64,
                out_dir.display()
            );
            Ok(())
        }
        Command::Convergence {
            config,
            levels,
            out,
        } => {
            let cfg = load_config(&config)?;
            let report = cmd_convergence(&cfg, levels, out.as_deref())?;
            for level in &report.levels {
                println!(
                    "dx={:.6e} dt={:.6e} l1_error={:.6e}",
                    level.dx, level.dt, level.l1_error
                );
            }
            println!(
                "observed order {:.4} (log-log residual {:.2e})",
                report.fitted_order, report.residual
            );
            Ok(())
        }
        Command::Preset {
            name,
            theta,
            emit_config,
        } => {
            cmd_preset(&name, theta, &emit_config)?;
            println!("wrote preset '{name}' (theta={theta}) to {}", emit_config.display());
            Ok(())
        }
        Command::CheckBounds { config } => {
            let cfg = load_config(&config)?;
            let record = cmd_check_bounds(&cfg)?;
            print!("{}", format_verdicts(&record));
            if record.passed() {
                Ok(())
            } else {
                Err(CliError::Verdict)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("fractsplit: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
