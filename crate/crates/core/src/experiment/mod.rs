//! Experiment configuration, the training loop, run logs and snapshots.

mod config;
mod model;
mod noisytv;
mod novelty;
mod runlog;
mod trainer;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{BonusKind, ExperimentConfig};
pub use model::BonusModel;
pub use noisytv::{
    noisytv_replay, run_noisytv_contrast, NoisyTvConfig, NoisyTvReport, OccupancyResult, ReplaySet, TileRatios,
};
pub use novelty::{run_novelty, DataSource, NoveltyRunConfig};
pub use runlog::{read_log, LogRow, RunLog};
pub use trainer::{Counters, Phase, Trainer};

use crate::error::Result;

pub const RUN_LOG_FILE: &str = "run.csv";
pub const RESOLVED_CONFIG_FILE: &str = "config.resolved";
pub const SNAPSHOT_FILE: &str = "snapshot.bin";

/// Where a run writes its artifacts.
#[derive(Debug, Clone)]
pub struct RunPaths {
    pub dir: PathBuf,
}

impl RunPaths {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn log(&self) -> PathBuf {
        self.dir.join(RUN_LOG_FILE)
    }

    pub fn config(&self) -> PathBuf {
        self.dir.join(RESOLVED_CONFIG_FILE)
    }

    pub fn snapshot(&self) -> PathBuf {
        self.dir.join(SNAPSHOT_FILE)
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub updates: usize,
    pub frames: usize,
    pub goals_total: usize,
    pub first_goal_frame: Option<usize>,
    pub states_visited: usize,
    pub config_hash: String,
}

fn summarize(trainer: &Trainer<BonusModel>) -> RunSummary {
    let c = trainer.counters();
    RunSummary {
        updates: c.update,
        frames: c.frames,
        goals_total: c.goals_total,
        first_goal_frame: c.first_goal_frame,
        states_visited: trainer.states_visited(),
        config_hash: trainer.config().hash(),
    }
}

fn write_snapshot(trainer: &Trainer<BonusModel>, path: &Path) -> Result<()> {
    let tmp = path.with_extension("bin.tmp");
    std::fs::write(&tmp, trainer.to_snapshot_bytes()?)?;
    std::fs::rename(tmp, path)?;
    Ok(())
}

/// Drives `trainer` until it has run `config.num_updates` updates.
///
/// On failure the last good state is written to the snapshot path before the
/// error is returned.
fn drive(mut trainer: Trainer<BonusModel>, paths: &RunPaths, mut log: RunLog<std::fs::File>) -> Result<RunSummary> {
    let start = Instant::now();
    let interval = trainer.config().snapshot_interval;
    let wall = trainer.config().log_wall_time;
    while !trainer.is_done() {
        let last_good = trainer.clone();
        match trainer.update() {
            Ok(mut row) => {
                if wall {
                    row.wall_time = Some(start.elapsed().as_secs_f64());
                }
                log.append(&row)?;
                if interval > 0 && row.update % interval == 0 {
                    write_snapshot(&trainer, &paths.snapshot())?;
                }
            }
            Err(err) => {
                write_snapshot(&last_good, &paths.snapshot())?;
                return Err(err);
            }
        }
    }
    write_snapshot(&trainer, &paths.snapshot())?;
    Ok(summarize(&trainer))
}

/// Runs a full training job, writing `run.csv`, `config.resolved` and `snapshot.bin`.
pub fn run_training(config: &ExperimentConfig, out: &Path) -> Result<RunSummary> {
    config.validate()?;
    let paths = RunPaths::new(out);
    std::fs::create_dir_all(out)?;
    std::fs::write(paths.config(), resolved_with_hash(config)?)?;
    let trainer = Trainer::from_config(config)?;
    let log = RunLog::create(&paths.log())?;
    drive(trainer, &paths, log)
}

/// Continues a run from `snapshot`, appending to `out/run.csv`.
///
/// `num_updates` optionally extends the run beyond the snapshot's config.
pub fn resume_training(snapshot: &Path, out: &Path, num_updates: Option<usize>) -> Result<RunSummary> {
    let mut trainer = Trainer::<BonusModel>::from_snapshot_bytes(&std::fs::read(snapshot)?)?;
    if let Some(n) = num_updates {
        trainer = trainer.with_num_updates(n);
    }
    let paths = RunPaths::new(out);
    std::fs::create_dir_all(out)?;
    let log = if paths.log().exists() {
        RunLog::append_to(&paths.log())?
    } else {
        RunLog::create(&paths.log())?
    };
    drive(trainer, &paths, log)
}

/// Resolved TOML prefixed with a comment carrying the config hash.
pub fn resolved_with_hash(config: &ExperimentConfig) -> Result<String> {
    Ok(format!("# config_hash = \"{}\"\n{}", config.hash(), config.to_toml()?))
}
