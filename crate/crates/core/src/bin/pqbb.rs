use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pq_baskakov::experiment::{self, ExperimentConfig, BUILTIN_CONFIGS};

/// Evaluate (p,q)-Baskakov-Beta operators and write CSV experiment data.
#[derive(Parser)]
#[command(name = "pqbb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Output directory (default: the config's `output`, else out/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override a config key, e.g. `--override parameters.q=0.75`.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Check a config file and print the validated settings.
    Validate { config: PathBuf },
    /// Reproduce the built-in figure experiments.
    Figures {
        /// figure1 or figure2; both when omitted.
        name: Option<String>,
        /// Parent directory; each figure goes to <out>/<name>.
        #[arg(long, default_value = "figures")]
        out: PathBuf,
    },
}

fn run(cfg: &ExperimentConfig, dir: PathBuf) -> u8 {
    match experiment::run_experiment(cfg, &dir) {
        Ok(report) => {
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            for msg in &report.flagged {
                eprintln!("warning: {msg}");
            }
            report.exit_code() as u8
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, out, overrides } => match experiment::load_config(&config, &overrides) {
            Ok(cfg) => {
                let dir = experiment::output_dir(&cfg, out.as_deref());
                run(&cfg, dir)
            }
            Err(d) => {
                eprintln!("error: invalid configuration {}:\n{d}", config.display());
                1
            }
        },
        Command::Validate { config } => match experiment::validate_config(&config) {
            Ok(cfg) => {
                println!("{cfg}");
                0
            }
            Err(d) => {
                eprintln!("error: invalid configuration {}:\n{d}", config.display());
                1
            }
        },
        Command::Figures { name, out } => {
            let names: Vec<String> = match name {
                Some(n) => vec![n],
                None => BUILTIN_CONFIGS.iter().map(|s| s.to_string()).collect(),
            };
            let mut worst = 0;
            for n in names {
                let code = match experiment::builtin_config(&n) {
                    Ok(cfg) => run(&cfg, out.join(&n)),
                    Err(e) => {
                        eprintln!("error: {e}");
                        1
                    }
                };
                // 1 outranks 2: a config error is worse than flagged cells.
                worst = match (worst, code) {
                    (1, _) | (_, 1) => 1,
                    (a, b) => a.max(b),
                };
            }
            worst
        }
    };
    ExitCode::from(code)
}
