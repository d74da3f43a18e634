mod commands;
mod lock;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

/// Damped Navier-Stokes solver with energy-inequality checks.
///
/// Exit codes: 0 all checks pass, 1 inequality violated, 2 blow-up,
/// 3 usage or configuration error. NS_THREADS caps worker threads.
#[derive(Parser, Debug)]
#[command(name = "logdamp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a simulation and write budgets, reports and a final checkpoint.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Run directory (created if missing).
        #[arg(long, default_value = "run")]
        output: PathBuf,
        /// Single-threaded, bit-reproducible execution.
        #[arg(long)]
        strict_deterministic: bool,
        /// Continue from a checkpoint written by an earlier solve.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Override a config key, e.g. `--set damping.alpha=0.3`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Re-run the inequality checks on a saved budget CSV.
    Check {
        #[arg(long)]
        budget: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Both)]
        mode: Mode,
        /// Relative tolerance (defaults to the run's configured value).
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run one solve per value of a parameter range.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// `KEY=START:STOP:STEP`; `alpha` and `beta` refer to the damping section.
        #[arg(long)]
        vary: String,
        #[arg(long, default_value = "sweep")]
        output: PathBuf,
        #[arg(long)]
        strict_deterministic: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    L2,
    H1,
    Both,
}

const USAGE_ERROR: u8 = 3;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(USAGE_ERROR);
    }

    let result = match cli.command {
        Command::Solve {
            config,
            output,
            strict_deterministic,
            resume,
            overrides,
        } => commands::solve(&config, &output, strict_deterministic, resume.as_deref(), &overrides),
        Command::Check { budget, mode, tol } => commands::check(&budget, mode, tol),
        Command::Sweep {
            config,
            vary,
            output,
            strict_deterministic,
        } => commands::sweep(&config, &vary, &output, strict_deterministic),
    };
    match result {
        Ok(status) => ExitCode::from(status as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(USAGE_ERROR)
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("NS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| anyhow::anyhow!("NS_THREADS must be a positive integer, got `{raw}`"))?;
    if n == 0 {
        anyhow::bail!("NS_THREADS must be a positive integer, got 0");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}
