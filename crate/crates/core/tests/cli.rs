use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = "env = pointmass\nhorizon = 64\nminibatch = 16\nepochs = 2\ntotal-steps = 192\nreplay-length = 3\n";

fn ppo_mber(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppo-mber"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.txt");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn missing_env_is_a_field_level_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "horizon = 64\n");
    let out = ppo_mber(&["run", "--config", &cfg]);
    assert!(!out.status.success());
    assert!(
        stderr(&out).contains("config field `env`"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn invalid_values_and_unknown_keys_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let out = ppo_mber(&["run", "--config", &cfg, "--minibatch", "17"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("`minibatch`"), "{}", stderr(&out));

    let cfg = write_config(dir.path(), &format!("{TINY}learning-rate = 1\n"));
    let out = ppo_mber(&["run", "--config", &cfg]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("`learning-rate`"), "{}", stderr(&out));
}

#[test]
fn seed_override_beats_file_and_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{TINY}seed = 3\n"));
    let run = dir.path().join("run");
    let out = ppo_mber(&[
        "run",
        "--config",
        &cfg,
        "--seed",
        "7",
        "--out-dir",
        run.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let manifest = fs::read_to_string(run.join("manifest.txt")).unwrap();
    assert!(manifest.lines().any(|l| l == "seed = 7"), "{manifest}");
    assert!(manifest.starts_with("manifest-version = 1\nmetrics-schema = 1\n"));
    let metrics = fs::read_to_string(run.join("metrics.csv")).unwrap();
    assert_eq!(
        metrics
            .lines()
            .filter(|l| l.starts_with("iteration,"))
            .count(),
        1
    );
    assert_eq!(metrics.lines().count(), 4);
    assert!(run.join("checkpoint.bin").exists());
}

#[test]
fn manifest_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{TINY}seed = 12\nbatch-drop = 0.05\n"));
    let first = dir.path().join("first");
    let out = ppo_mber(&[
        "run",
        "--config",
        &cfg,
        "--out-dir",
        first.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let second = dir.path().join("second");
    let manifest = first.join("manifest.txt");
    let out = ppo_mber(&[
        "run",
        "--config",
        manifest.to_str().unwrap(),
        "--out-dir",
        second.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    for file in ["metrics.csv", "checkpoint.bin"] {
        assert_eq!(
            fs::read(first.join(file)).unwrap(),
            fs::read(second.join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn boolean_flags_accept_bare_and_explicit_forms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    for (flags, expected) in [
        (vec!["--adaptive", "false"], "adaptive = false"),
        (vec!["--fixed-minibatch"], "fixed-minibatch = true"),
    ] {
        let run = dir.path().join(flags.join(""));
        let mut args = vec!["run", "--config", &cfg, "--out-dir", run.to_str().unwrap()];
        args.extend(flags.iter().copied());
        let out = ppo_mber(&args);
        assert!(out.status.success(), "{}", stderr(&out));
        let manifest = fs::read_to_string(run.join("manifest.txt")).unwrap();
        assert!(manifest.contains(expected), "{manifest}");
    }
}

#[test]
fn sweep_writes_one_directory_per_cell_and_a_ranked_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let root = dir.path().join("sweep");
    let out = ppo_mber(&[
        "sweep",
        "--config",
        &cfg,
        "--grid",
        "replay-length=1,2",
        "--grid",
        "seed=0,1",
        "--out-dir",
        root.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let cells: Vec<_> = fs::read_dir(&root)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .collect();
    assert_eq!(cells.len(), 4);
    for cell in &cells {
        assert!(cell.path().join("metrics.csv").exists());
        assert!(cell.path().join("manifest.txt").exists());
    }
    let scores = fs::read_to_string(root.join("scores.csv")).unwrap();
    assert_eq!(scores.lines().count(), 5);
    let summary = fs::read_to_string(root.join("summary.csv")).unwrap();
    let finals: Vec<f64> = summary
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(finals.len(), 2);
    assert!(finals.windows(2).all(|w| w[0] >= w[1]), "{summary}");
}

#[test]
fn duplicated_configs_score_equally() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let root = dir.path().join("dup");
    let out = ppo_mber(&[
        "sweep",
        "--config",
        &cfg,
        "--grid",
        "value-coef=1,1.0",
        "--out-dir",
        root.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let summary = fs::read_to_string(root.join("summary.csv")).unwrap();
    let rows: Vec<Vec<&str>> = summary
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][2..], rows[1][2..], "{summary}");
}

#[test]
fn failed_cells_are_recorded_and_the_sweep_continues() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let root = dir.path().join("partial");
    let out = ppo_mber(&[
        "sweep",
        "--config",
        &cfg,
        "--grid",
        "minibatch=16,17",
        "--out-dir",
        root.to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let failures = fs::read_to_string(root.join("failures.txt")).unwrap();
    assert!(failures.contains("minibatch=17"), "{failures}");
    assert_eq!(
        fs::read_to_string(root.join("scores.csv"))
            .unwrap()
            .lines()
            .count(),
        2
    );
}

#[test]
fn single_batch_isweight_log_holds_only_the_current_batch() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let run = dir.path().join("diag");
    let out = ppo_mber(&[
        "diag-isweight",
        "--config",
        &cfg,
        "--replay-length",
        "1",
        "--out-dir",
        run.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let log = fs::read_to_string(run.join("isweight.csv")).unwrap();
    let mut lines = log.lines();
    assert_eq!(lines.next(), Some("iteration,avg_is,batch_weight_lag0"));
    for line in lines {
        assert_eq!(line.split(',').nth(2), Some("1"), "{log}");
    }
}

#[test]
fn action_dimension_sweep_emits_one_row_per_k() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let root = dir.path().join("synth");
    let out = ppo_mber(&[
        "diag-isweight",
        "--config",
        &cfg,
        "--action-dims",
        "1,2,4",
        "--out-dir",
        root.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = fs::read_to_string(root.join("synth_k.csv")).unwrap();
    let ks: Vec<&str> = table
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(ks, ["1", "2", "4"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("synth-4"));
}
