use std::path::Path;
use std::process::{Command, Output};

const SMALL_TRAIN: &str = r#"
num_envs = 4
rollout_len = 32
num_updates = 3
warmup_steps = 8
policy_hidden = [16]

[env]
num_rooms = 3
room_width = 4

[rnd]
hidden = [16]
embedding_dim = 8
"#;

const SMALL_NOVELTY: &str = r#"
seeds = [0, 1]
synthetic_test_per_class = 50

[novelty]
n_values = [10, 50, 200]
total_train = 200
train_steps = 100
"#;

fn rnd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rnd")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn train(dir: &Path, config: &str, out: &str, extra: &[&str]) -> Output {
    let out = dir.join(out);
    let mut args = vec!["train", "--config", config, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    rnd(&args)
}

#[test]
fn train_writes_log_config_and_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL_TRAIN);
    let out = train(dir.path(), &cfg, "run", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("run");
    let log = std::fs::read_to_string(run.join("run.csv")).unwrap();
    assert!(log.starts_with("update,frames,"));
    assert_eq!(log.lines().count(), 1 + 3);
    let resolved = std::fs::read_to_string(run.join("config.resolved")).unwrap();
    assert!(resolved.starts_with("# config_hash = "));
    assert!(run.join("snapshot.bin").is_file());
    assert!(String::from_utf8_lossy(&out.stdout).contains("config_hash="));
}

#[test]
fn repeated_runs_write_identical_logs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL_TRAIN);
    for name in ["a", "b"] {
        assert!(train(dir.path(), &cfg, name, &["--seed", "11"]).status.success());
    }
    let read = |n: &str| std::fs::read(dir.path().join(n).join("run.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
}

#[test]
fn replay_snapshot_continues_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL_TRAIN);
    let full = SMALL_TRAIN.replace("num_updates = 3", "num_updates = 5");
    let full_cfg = write(dir.path(), "full.toml", &full);
    assert!(train(dir.path(), &full_cfg, "full", &[]).status.success());
    assert!(train(dir.path(), &cfg, "part", &[]).status.success());

    let part = dir.path().join("part");
    let frames = (5 * 4 * 32).to_string();
    let out = rnd(&["replay-snapshot", part.to_str().unwrap(), "--frames", &frames]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        std::fs::read(part.join("run.csv")).unwrap(),
        std::fs::read(dir.path().join("full").join("run.csv")).unwrap()
    );
}

#[test]
fn novelty_then_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "novelty.toml", SMALL_NOVELTY);
    let out_dir = dir.path().join("nov");
    let out = rnd(&["novelty", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let curve = std::fs::read_to_string(out_dir.join("curve.csv")).unwrap();
    let mut lines = curve.lines();
    assert_eq!(lines.next(), Some("n,test_mse,seed"));
    assert_eq!(lines.count(), 3 * 2);

    let check = rnd(&["check", out_dir.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&check.stdout);
    assert!(stdout.contains("spearman="));
    assert_eq!(check.status.success(), stdout.contains("PASS"));
}

fn curve_csv(mse: [f64; 3]) -> String {
    let mut text = String::from("n,test_mse,seed\n");
    for seed in 0..3 {
        for (n, m) in [10, 100, 1000].iter().zip(mse) {
            text.push_str(&format!("{n},{m},{seed}\n"));
        }
    }
    text
}

#[test]
fn check_exit_status_follows_the_trend() {
    let dir = tempfile::tempdir().unwrap();
    let up = write(dir.path(), "up.csv", &curve_csv([0.1, 0.2, 0.3]));
    let out = rnd(&["check", &up]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));

    let down = write(dir.path(), "down.csv", &curve_csv([0.3, 0.2, 0.1]));
    assert!(rnd(&["check", &down]).status.success());
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "num_envs = \"many\"\n");
    let out = train(dir.path(), &bad, "x", &[]);
    assert_eq!(out.status.code(), Some(7));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));

    let unknown = write(dir.path(), "unknown.toml", "warp_factor = 9\n");
    assert_eq!(train(dir.path(), &unknown, "y", &[]).status.code(), Some(7));

    let missing = dir.path().join("nope.csv");
    assert_eq!(rnd(&["check", missing.to_str().unwrap()]).status.code(), Some(8));

    let garbage = write(dir.path(), "garbage.bin", "not a snapshot");
    assert_eq!(rnd(&["replay-snapshot", &garbage]).status.code(), Some(6));

    assert_eq!(rnd(&["train", "--bonus", "psychic"]).status.code(), Some(2));
}
