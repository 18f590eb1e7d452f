//! `agp`: run, sweep, analyze and validate gradient-push experiments.
//!
//! Exit codes: 0 success, 2 invalid input or missing artifacts, 3 runtime
//! failure, 4 sweep with failed cells.

use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};
use tracing::Level;

use gradpush_cli::{commands, CliError};

#[derive(Parser)]
#[command(name = "agp", version, about = "Asynchronous gradient-push experiments over delayed directed networks")]
struct Cli {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write trajectory, metadata and report.
    Run {
        /// TOML experiment config.
        config: PathBuf,
        /// Output directory; overrides output.dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override a config field, e.g. --set steps.theta=0.7. Repeatable.
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        set: Vec<String>,
    },
    /// Run one experiment per value of a config field, in parallel.
    Sweep {
        config: PathBuf,
        /// Field to vary, e.g. schedule.tau_proc_max.
        #[arg(long)]
        field: String,
        /// Comma-separated values, each read as a TOML literal.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<String>,
        /// Sweep root; each cell writes to <out>/<field>=<value>.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        set: Vec<String>,
    },
    /// Recompute the report of a finished run from its artifacts.
    Analyze {
        /// Run directory written by `run`.
        dir: PathBuf,
    },
    /// Check a config, and optionally a schedule file, without running.
    Validate {
        config: PathBuf,
        /// Schedule text file to verify against the configured graph.
        #[arg(long)]
        schedule: Option<PathBuf>,
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        set: Vec<String>,
    },
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { config, out, set } => {
            let mut cfg = commands::load_config(&config, &set)?;
            if let Some(out) = out {
                cfg.output.dir = out;
            }
            let report = commands::cmd_run(&cfg)?;
            print!("{}", report.to_text());
        }
        Command::Sweep {
            config,
            field,
            values,
            out,
            jobs,
            set,
        } => {
            let cfg = commands::load_config(&config, &set)?;
            let run = || commands::cmd_sweep(&cfg, &field, &values, out.clone());
            let rows = match jobs {
                Some(j) => rayon::ThreadPoolBuilder::new()
                    .num_threads(j.max(1))
                    .build()
                    .map_err(|e| CliError::Validation(e.to_string()))?
                    .install(run)?,
                None => run()?,
            };
            for r in rows {
                println!(
                    "{}={}  actual {:e}  bound {:e}  slope {}",
                    r.field,
                    r.value,
                    r.actual.unwrap_or(f64::NAN),
                    r.bound.unwrap_or(f64::NAN),
                    r.slope.map_or("-".to_string(), |s| format!("{s:.3}"))
                );
            }
        }
        Command::Analyze { dir } => {
            let report = commands::cmd_analyze(&dir)?;
            print!("{}", report.to_text());
        }
        Command::Validate { config, schedule, set } => {
            let cfg = commands::load_config(&config, &set)?;
            println!("{}", commands::cmd_validate(&cfg, schedule.as_deref())?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => Level::WARN,
        1 => Level::INFO,
        _ => Level::DEBUG,
    };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_max_level(level)
        .with_target(false)
        .with_ansi(std::io::stderr().is_terminal())
        .init();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
