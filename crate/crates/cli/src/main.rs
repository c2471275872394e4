//! `qensemble`: train and compare agents on the bundled platformer.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 numeric abort.
//! `QENSEMBLE_THREADS` sets the worker-thread count.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qensemble::harness::{
    compare_runs, format_summary, run_experiment_with, write_summary, AgentKind, ExperimentConfig, MOVING_WINDOW,
};
use qensemble::Error;

const THREADS_VAR: &str = "QENSEMBLE_THREADS";

#[derive(Parser, Debug)]
#[command(name = "qensemble", version, about = "Multi-chip QCNN ensemble DDQN experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train one agent and write metrics, checkpoint and config snapshot.
    Run(RunArgs),
    /// Summarise final-window means of two or more metrics files.
    Compare {
        #[arg(required = true, num_args = 2..)]
        files: Vec<PathBuf>,
        /// Trailing episodes to average.
        #[arg(long, default_value_t = MOVING_WINDOW)]
        window: usize,
        /// Also write the summary as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the default configuration as TOML.
    Config,
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// classical, single_chip or multi_chip
    #[arg(long)]
    agent: Option<AgentKind>,
    #[arg(long)]
    chips: Option<usize>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Suppress per-episode progress lines.
    #[arg(long)]
    quiet: bool,
}

impl RunArgs {
    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            c.train.seed = s;
        }
        if let Some(o) = &self.out {
            c.out_dir = o.clone();
        }
        if let Some(a) = self.agent {
            c.agent = a;
        }
        if let Some(k) = self.chips {
            c.chips = k;
        }
        if let Some(e) = self.episodes {
            c.train.max_episodes = e;
        }
        Ok(c)
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_VAR} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Error> {
    configure_threads()?;
    match cli.command {
        Command::Run(args) => {
            let config = args.resolve()?;
            let quiet = args.quiet;
            let outcome = run_experiment_with(&config, |r| {
                if !quiet {
                    eprintln!(
                        "episode {:>4}  reward {:>9.2}  ma100 {:>9.2}  eps {:.4}  steps {}",
                        r.episode, r.reward, r.reward_ma100, r.epsilon, r.steps
                    );
                }
            })?;
            println!(
                "{} episodes, {} parameters, results in {}",
                outcome.records.len(),
                outcome.num_params,
                outcome.out_dir.display()
            );
        }
        Command::Compare { files, window, out } => {
            let rows = compare_runs(&files, window)?;
            print!("{}", format_summary(&rows));
            if let Some(p) = out {
                write_summary(p, &rows)?;
            }
        }
        Command::Config => print!("{}", ExperimentConfig::default().to_toml()),
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Numeric(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
