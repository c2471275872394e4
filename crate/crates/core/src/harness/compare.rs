use std::path::{Path, PathBuf};

use serde::Serialize;

use super::metrics::{csv_error, read_metrics_file, MetricsRecord};
use crate::error::{Error, Result};

pub const SUMMARY_HEADER: &str = "run,episodes,window,mean_reward,mean_loss";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub run: String,
    pub episodes: usize,
    /// Episodes actually averaged: `min(window, episodes)`.
    pub window: usize,
    pub mean_reward: f64,
    /// Mean over the window's episodes that recorded a loss.
    pub mean_loss: Option<f64>,
}

/// Means over the last `window` episodes of one run.
pub fn summarize(run: &str, records: &[MetricsRecord], window: usize) -> Result<RunSummary> {
    if records.is_empty() {
        return Err(Error::Config(format!("run `{run}` has no episodes")));
    }
    if window == 0 {
        return Err(Error::Config("summary window must be positive".into()));
    }
    let tail = &records[records.len().saturating_sub(window)..];
    let losses: Vec<f64> = tail.iter().filter_map(|r| r.loss).collect();
    Ok(RunSummary {
        run: run.to_string(),
        episodes: records.len(),
        window: tail.len(),
        mean_reward: tail.iter().map(|r| r.reward).sum::<f64>() / tail.len() as f64,
        mean_loss: (!losses.is_empty()).then(|| losses.iter().sum::<f64>() / losses.len() as f64),
    })
}

/// Summarises at least two metric files whose episode ranges overlap.
pub fn compare_runs(paths: &[PathBuf], window: usize) -> Result<Vec<RunSummary>> {
    if paths.len() < 2 {
        return Err(Error::Config("compare needs at least two metric files".into()));
    }
    let mut runs = Vec::new();
    for p in paths {
        let records = read_metrics_file(p).map_err(|e| match e {
            Error::Parse { line, message } => Error::Parse {
                line,
                message: format!("{}: {message}", p.display()),
            },
            other => other,
        })?;
        if records.is_empty() {
            return Err(Error::Parse {
                line: 2,
                message: format!("{}: no episode rows", p.display()),
            });
        }
        runs.push((p, records));
    }
    let lo = runs.iter().map(|(_, r)| r[0].episode).max().unwrap();
    let hi = runs.iter().map(|(_, r)| r[r.len() - 1].episode).min().unwrap();
    if lo > hi {
        return Err(Error::Config("metric files cover disjoint episode ranges".into()));
    }
    runs.iter().map(|(p, r)| summarize(&run_label(p), r, window)).collect()
}

fn run_label(path: &Path) -> String {
    path.display().to_string()
}

pub fn write_summary(path: impl AsRef<Path>, rows: &[RunSummary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Fixed-width table for terminals.
pub fn format_summary(rows: &[RunSummary]) -> String {
    let width = rows.iter().map(|r| r.run.len()).max().unwrap_or(3).max(3);
    let mut out = format!(
        "{:<width$}  {:>8}  {:>6}  {:>12}  {:>12}\n",
        "run", "episodes", "window", "mean_reward", "mean_loss"
    );
    for r in rows {
        let loss = r.mean_loss.map_or_else(|| "-".to_string(), |l| format!("{l:.6}"));
        out.push_str(&format!(
            "{:<width$}  {:>8}  {:>6}  {:>12.4}  {:>12}\n",
            r.run, r.episodes, r.window, r.mean_reward, loss
        ));
    }
    out
}
