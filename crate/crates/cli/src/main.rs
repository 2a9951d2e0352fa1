use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mtomd_core::harness::{
    emit_report, emit_sweep, prepare, run_experiment, sweep, RunConfig, VERSION,
};
use mtomd_core::{selftest, Error};

/// Multitask online mirror descent experiments.
#[derive(Parser)]
#[command(name = "mtomd", version = VERSION)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its regret report.
    Run {
        config: PathBuf,
        /// Report CSV path; defaults to `<name>.csv`.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run every cell of the configured grids.
    Sweep {
        config: PathBuf,
        /// Summary CSV path; defaults to `<name>_sweep.csv`.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a configuration and build its stream without running it.
    Validate { config: PathBuf },
    /// Run the built-in invariant checks.
    Selftest,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn load(path: &Path) -> Result<RunConfig, Failure> {
    RunConfig::from_path(path).map_err(|e| Failure::Config(e.to_string()))
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { config, output } => {
            let cfg = load(&config)?;
            let report = run_experiment(&cfg)?;
            let out = output.unwrap_or_else(|| PathBuf::from(format!("{}.csv", cfg.name)));
            let side = emit_report(&report, &out)?;
            println!(
                "final regret {:.6e} over {} rounds",
                report.final_regret,
                report.horizon()
            );
            if let Some(b) = report.stated_bound {
                println!("stated bound {b:.6e}");
            }
            println!("wrote {} and {}", out.display(), side.display());
        }
        Command::Sweep { config, output } => {
            let cfg = load(&config)?;
            let cells = sweep(&cfg)?;
            let out = output.unwrap_or_else(|| PathBuf::from(format!("{}_sweep.csv", cfg.name)));
            emit_sweep(&cells, &out)?;
            println!("{} cells, wrote {}", cells.len(), out.display());
        }
        Command::Validate { config } => {
            let cfg = load(&config)?;
            let setup = prepare(&cfg)?;
            println!(
                "ok: {} rounds, {} tasks, dim {}, b = {}, L = {:.6e}, update {:?}",
                setup.rounds.len(),
                setup.n_tasks,
                setup.dim,
                setup.b,
                setup.lipschitz,
                setup.rule
            );
        }
        Command::Selftest => {
            let checks = selftest::run_all();
            let failed = checks.iter().filter(|c| !c.passed).count();
            for c in &checks {
                println!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            if failed > 0 {
                return Err(Failure::Runtime(format!(
                    "{failed} of {} checks failed",
                    checks.len()
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
