use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rnd_core::data::{check_monotonicity, read_curve_csv};
use rnd_core::experiment::{
    resume_training, run_noisytv_contrast, run_novelty, run_training, BonusKind, ExperimentConfig, NoisyTvConfig,
    NoveltyRunConfig, RunSummary, RUN_LOG_FILE, SNAPSHOT_FILE,
};
use rnd_core::{Error, Result};

const CURVE_FILE: &str = "curve.csv";
const NOISYTV_FILE: &str = "noisytv.csv";
/// Fraction of seeds whose curve must slope downward for `check` to pass.
const MONOTONE_FRACTION: f64 = 0.8;
/// Exit code for a `check` that ran but did not pass.
const CHECK_FAILED: u8 = 1;

#[derive(Parser)]
#[command(name = "rnd", version, about = "Random network distillation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Train PPO with an exploration bonus on the corridor.
    Train {
        #[command(flatten)]
        common: Common,
        /// Frame budget; rounded down to whole rollouts.
        #[arg(long)]
        frames: Option<usize>,
        #[arg(long, value_parser = parse_bonus)]
        bonus: Option<BonusKind>,
    },
    /// Distillation error on a held-out class versus its share of the training set.
    Novelty {
        #[command(flatten)]
        common: Common,
        /// Directory with the four MNIST IDX files (synthetic digits otherwise).
        #[arg(long)]
        mnist_dir: Option<PathBuf>,
    },
    /// Compare RND and forward-dynamics bonuses on a noisy room.
    Noisytv {
        #[command(flatten)]
        common: Common,
    },
    /// Check that a novelty curve decreases with n; exits 1 when it does not.
    Check {
        /// Curve CSV, or a directory containing curve.csv.
        path: PathBuf,
    },
    /// Continue a training run from its snapshot.
    ReplaySnapshot {
        /// Snapshot file, or a run directory containing snapshot.bin.
        snapshot: PathBuf,
        /// Where to append run.csv; defaults to the snapshot's directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// New total frame budget for the run.
        #[arg(long)]
        frames: Option<usize>,
    },
}

fn parse_bonus(s: &str) -> std::result::Result<BonusKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn read_config(path: Option<&Path>) -> Result<Option<String>> {
    path.map(std::fs::read_to_string).transpose().map_err(Error::from)
}

fn print_summary(summary: &RunSummary, out: &Path) {
    println!(
        "updates={} frames={} goals={} first_goal_frame={} states_visited={}",
        summary.updates,
        summary.frames,
        summary.goals_total,
        summary
            .first_goal_frame
            .map_or_else(|| "none".to_string(), |f| f.to_string()),
        summary.states_visited
    );
    println!("config_hash={}", summary.config_hash);
    println!("log={}", out.join(RUN_LOG_FILE).display());
}

fn train(common: Common, frames: Option<usize>, bonus: Option<BonusKind>) -> Result<()> {
    let mut cfg = match read_config(common.config.as_deref())? {
        Some(text) => ExperimentConfig::from_toml(&text)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(kind) = bonus {
        cfg.bonus = kind;
    }
    if let Some(frames) = frames {
        cfg.set_frame_budget(frames);
    }
    cfg.validate()?;
    let summary = run_training(&cfg, &common.out)?;
    print_summary(&summary, &common.out);
    Ok(())
}

fn novelty(common: Common, mnist_dir: Option<PathBuf>) -> Result<()> {
    let mut cfg = match read_config(common.config.as_deref())? {
        Some(text) => NoveltyRunConfig::from_toml(&text)?,
        None => NoveltyRunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seeds = vec![seed];
    }
    if mnist_dir.is_some() {
        cfg.mnist_dir = mnist_dir;
    }
    std::fs::create_dir_all(&common.out)?;
    let path = common.out.join(CURVE_FILE);
    let (curves, source) = run_novelty(&cfg, Some(&path))?;
    println!("data={source:?} seeds={} config_hash={}", curves.len(), cfg.hash());
    println!("curve={}", path.display());
    Ok(())
}

fn noisytv(common: Common) -> Result<()> {
    let mut cfg = match read_config(common.config.as_deref())? {
        Some(text) => NoisyTvConfig::from_toml(&text)?,
        None => NoisyTvConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seeds = vec![seed];
        if !cfg.agent_seeds.is_empty() {
            cfg.agent_seeds = vec![seed];
        }
    }
    let report = run_noisytv_contrast(&cfg)?;
    let mut text = String::from("seed,rnd_noisy,rnd_matched,rnd_ratio,dynamics_noisy,dynamics_matched,dynamics_ratio\n");
    for r in &report.ratios {
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.seed,
            r.rnd_noisy,
            r.rnd_matched,
            r.rnd_ratio(),
            r.dynamics_noisy,
            r.dynamics_matched,
            r.dynamics_ratio()
        ));
    }
    print!("{text}");
    for o in &report.occupancy {
        println!("occupancy seed={} rnd={:.4} dynamics={:.4}", o.seed, o.rnd, o.dynamics);
    }
    std::fs::create_dir_all(&common.out)?;
    std::fs::write(common.out.join(NOISYTV_FILE), text)?;
    Ok(())
}

fn check(path: PathBuf) -> Result<bool> {
    let path = if path.is_dir() { path.join(CURVE_FILE) } else { path };
    let rows = read_curve_csv(std::fs::File::open(&path)?)?;
    let report = check_monotonicity(&rows, MONOTONE_FRACTION)?;
    for (seed, rho) in &report.per_seed {
        println!("seed={seed} spearman={rho:.4}");
    }
    let verdict = if report.passed() { "PASS" } else { "FAIL" };
    println!(
        "{verdict}: {}/{} seeds decreasing (need {})",
        report.negative,
        report.per_seed.len(),
        report.required
    );
    Ok(report.passed())
}

fn replay(snapshot: PathBuf, out: Option<PathBuf>, frames: Option<usize>) -> Result<()> {
    let snapshot = if snapshot.is_dir() { snapshot.join(SNAPSHOT_FILE) } else { snapshot };
    let out = out.unwrap_or_else(|| snapshot.parent().map(Path::to_path_buf).unwrap_or_default());
    let updates = match frames {
        Some(f) => {
            let cfg = rnd_core::experiment::Trainer::<rnd_core::experiment::BonusModel>::from_snapshot_bytes(
                &std::fs::read(&snapshot)?,
            )?
            .config()
            .clone();
            Some(f / cfg.frames_per_update())
        }
        None => None,
    };
    let summary = resume_training(&snapshot, &out, updates)?;
    print_summary(&summary, &out);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train { common, frames, bonus } => train(common, frames, bonus).map(|_| true),
        Command::Novelty { common, mnist_dir } => novelty(common, mnist_dir).map(|_| true),
        Command::Noisytv { common } => noisytv(common).map(|_| true),
        Command::Check { path } => check(path),
        Command::ReplaySnapshot { snapshot, out, frames } => replay(snapshot, out, frames).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(CHECK_FAILED),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.category().exit_code() as u8)
        }
    }
}
