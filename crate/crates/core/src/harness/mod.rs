//! Experiment configuration, training runs, metrics CSVs and run comparison.
//!
//! A run directory holds:
//!
//! * `config.toml`: the normalised config; re-running it reproduces the run.
//! * `metrics.csv`: one [`MetricsRecord`] per episode, deterministic under the seed.
//! * `timing.csv`: cumulative wall-clock seconds per episode.
//! * `checkpoint.txt`: final networks and optimiser state (see [`crate::checkpoint`]).

mod compare;
mod config;
mod metrics;
mod runner;

pub use compare::{compare_runs, format_summary, summarize, write_summary, RunSummary, SUMMARY_HEADER};
pub use config::{AgentKind, ExperimentConfig, CHIP_PRESETS};
pub use metrics::{
    read_metrics, read_metrics_file, MetricsRecord, MetricsWriter, MovingAverages, METRICS_HEADER, MOVING_WINDOW,
};
pub use runner::{
    build_model, load_world, random_policy_rewards, run_experiment, run_experiment_with, snapshot_path, RunOutcome,
    RunSeeds, ABORT_CHECKPOINT_FILE, CHECKPOINT_FILE, METRICS_FILE, SNAPSHOT_FILE, TIMING_FILE,
};
