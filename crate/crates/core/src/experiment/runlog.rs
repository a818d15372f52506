use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One row of `run.csv`, written after every update.
///
/// The four `*_updates` / `*_steps` columns are cumulative counters; their
/// relative order across rows makes the update schedule auditable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub update: usize,
    pub frames: usize,
    pub mean_ext_reward: f64,
    pub mean_int_reward: f64,
    pub mean_int_normalized: f64,
    pub episodes: usize,
    pub mean_episode_return: f64,
    pub goals_total: usize,
    pub states_visited: usize,
    pub max_room: usize,
    pub noisy_occupancy: f64,
    pub policy_loss: f64,
    pub value_loss_ext: f64,
    pub value_loss_int: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub bonus_loss: f64,
    pub obs_norm_updates: usize,
    pub reward_norm_updates: usize,
    pub policy_steps: usize,
    pub bonus_steps: usize,
    pub wall_time: Option<f64>,
}

/// Append-only CSV sink, flushed after each row.
pub struct RunLog<W: Write> {
    writer: csv::Writer<W>,
}

impl<W: Write> RunLog<W> {
    pub fn new(inner: W) -> Self {
        Self {
            writer: csv::Writer::from_writer(inner),
        }
    }

    /// A sink that continues an existing file: no header is written.
    pub fn continuing(inner: W) -> Self {
        Self {
            writer: csv::WriterBuilder::new().has_headers(false).from_writer(inner),
        }
    }

    pub fn append(&mut self, row: &LogRow) -> Result<()> {
        self.writer.serialize(row)?;
        self.writer.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> Result<W> {
        self.writer
            .into_inner()
            .map_err(|e| crate::Error::Io(std::io::Error::other(e.to_string())))
    }
}

impl RunLog<File> {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(Self::new(File::create(path)?))
    }

    pub fn append_to(path: &Path) -> Result<Self> {
        Ok(Self::continuing(OpenOptions::new().append(true).open(path)?))
    }
}

pub fn read_log(path: &Path) -> Result<Vec<LogRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let rows = reader.deserialize().collect::<std::result::Result<Vec<LogRow>, _>>()?;
    Ok(rows)
}
