use std::collections::VecDeque;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Trailing window for the moving averages.
pub const MOVING_WINDOW: usize = 100;

pub const METRICS_HEADER: &str = "episode,reward,reward_ma100,loss,loss_ma100,epsilon,steps";

/// One row of `metrics.csv`. Wall-clock time lives in `timing.csv` so that
/// this file is byte-identical across runs with the same seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub episode: usize,
    pub reward: f64,
    pub reward_ma100: f64,
    /// Mean loss over the episode's updates; empty while still in burn-in.
    pub loss: Option<f64>,
    pub loss_ma100: Option<f64>,
    pub epsilon: f64,
    pub steps: usize,
}

/// Trailing means whose denominators are `min(window, values seen)`.
/// Missing losses are skipped rather than counted as zero.
#[derive(Clone, Debug)]
pub struct MovingAverages {
    window: usize,
    rewards: VecDeque<f64>,
    losses: VecDeque<Option<f64>>,
}

impl MovingAverages {
    pub fn new(window: usize) -> Self {
        Self {
            window,
            rewards: VecDeque::new(),
            losses: VecDeque::new(),
        }
    }

    /// Adds an episode and returns `(reward_ma, loss_ma)`.
    pub fn push(&mut self, reward: f64, loss: Option<f64>) -> (f64, Option<f64>) {
        if self.rewards.len() == self.window {
            self.rewards.pop_front();
            self.losses.pop_front();
        }
        self.rewards.push_back(reward);
        self.losses.push_back(loss);
        let reward_ma = self.rewards.iter().sum::<f64>() / self.rewards.len() as f64;
        let present: Vec<f64> = self.losses.iter().flatten().copied().collect();
        let loss_ma = (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64);
        (reward_ma, loss_ma)
    }
}

/// Appends records to a CSV with the pinned header, flushing every row.
pub struct MetricsWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl MetricsWriter<std::fs::File> {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::new(std::fs::File::create(path)?))
    }
}

impl<W: Write> MetricsWriter<W> {
    pub fn new(out: W) -> Self {
        Self {
            inner: csv::WriterBuilder::new().has_headers(true).from_writer(out),
        }
    }

    pub fn write(&mut self, record: &MetricsRecord) -> Result<()> {
        self.inner.serialize(record).map_err(csv_error)?;
        self.inner.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> Result<W> {
        self.inner.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// Parses a metrics CSV; rejects empty files and wrong headers.
pub fn read_metrics(text: &str) -> Result<Vec<MetricsRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(csv_error)?.iter().collect::<Vec<_>>().join(",");
    if header.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "empty metrics file".into(),
        });
    }
    if header != METRICS_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header `{header}`"),
        });
    }
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        out.push(row.map_err(csv_error)?);
    }
    Ok(out)
}

pub fn read_metrics_file(path: impl AsRef<Path>) -> Result<Vec<MetricsRecord>> {
    read_metrics(&std::fs::read_to_string(path)?)
}
