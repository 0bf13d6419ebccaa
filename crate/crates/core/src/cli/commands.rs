use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::metrics::{
    IterationRecord, MetricsWriter, ScoreRow, ScoreTable, METRICS_SCHEMA_VERSION,
};
use crate::trainer::{ConfigBuilder, TrainConfig, Trainer};

const MANIFEST_VERSION: u32 = 1;
const SCORE_NORMALIZATION: &str = "min-max over compared set";

pub(super) fn default_dir(config: &TrainConfig) -> PathBuf {
    config
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("runs/{}-seed{}", config.env, config.seed)))
}

/// Writes the run manifest: format metadata followed by the full config.
/// Feeding it back as a config file reproduces the run.
pub fn write_manifest(config: &TrainConfig, path: &Path) -> Result<()> {
    let mut text = String::new();
    let _ = writeln!(text, "manifest-version = {MANIFEST_VERSION}");
    let _ = writeln!(text, "metrics-schema = {METRICS_SCHEMA_VERSION}");
    let _ = writeln!(text, "score-normalization = {SCORE_NORMALIZATION}");
    let _ = writeln!(text, "engine-version = {}", env!("CARGO_PKG_VERSION"));
    text.push_str(&config.to_kv());
    fs::write(path, text)?;
    Ok(())
}

/// Trains `config` in double precision, writing `manifest.txt`,
/// `metrics.csv` (flushed every iteration) and `checkpoint.bin` into `dir`.
pub fn run_to_dir(config: &TrainConfig, dir: &Path) -> Result<Vec<IterationRecord>> {
    fs::create_dir_all(dir)?;
    write_manifest(config, &dir.join("manifest.txt"))?;
    let mut writer = MetricsWriter::new(BufWriter::new(File::create(dir.join("metrics.csv"))?));
    let mut trainer = Trainer::<f64>::new(config.clone());
    let mut records = Vec::new();
    trainer.run(|r| {
        writer.emit(r)?;
        records.push(r.clone());
        Ok(())
    })?;
    writer.into_inner().flush()?;
    trainer.checkpoint().save(&dir.join("checkpoint.bin"))?;
    Ok(records)
}

/// One grid dimension, parsed from `key=v1,v2,...`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub key: String,
    pub values: Vec<String>,
}

impl FromStr for GridAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (key, values) = s
            .split_once('=')
            .ok_or_else(|| Error::config("grid", format!("expected key=v1,v2, got {s:?}")))?;
        let key = key.trim().trim_start_matches("--").to_string();
        let values: Vec<String> = values
            .split(',')
            .map(|v| v.trim().to_string())
            .filter(|v| !v.is_empty())
            .collect();
        if values.is_empty() {
            return Err(Error::config("grid", format!("no values for {key}")));
        }
        // Reject unknown keys before any cell runs.
        ConfigBuilder::new().set(&key, &values[0])?;
        Ok(Self { key, values })
    }
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutcome {
    pub completed: usize,
    /// Cell name and error message of every failed cell.
    pub failed: Vec<(String, String)>,
    pub scores: ScoreTable,
}

/// Score of one finished run: the final 100-episode mean and the mean over
/// every completed episode.
pub fn score_row(
    config: &TrainConfig,
    label: &str,
    records: &[IterationRecord],
) -> Result<ScoreRow> {
    let last = records
        .last()
        .ok_or_else(|| Error::Record("run produced no iterations".into()))?;
    let missing = || Error::Record("run completed no episodes".into());
    Ok(ScoreRow {
        task: config.env.to_string(),
        config: label.to_string(),
        seed: config.seed,
        final_score: last.mean_return_100.ok_or_else(missing)?,
        all_score: last.mean_return_all.ok_or_else(missing)?,
    })
}

fn cells(axes: &[GridAxis]) -> Vec<Vec<(String, String)>> {
    let mut out = vec![Vec::new()];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|cell| {
                axis.values.iter().map(move |v| {
                    let mut next = cell.clone();
                    next.push((axis.key.clone(), v.clone()));
                    next
                })
            })
            .collect();
    }
    out
}

/// Runs every cell of the product grid under `root`, one directory per
/// cell. Failed cells are logged to `failures.txt` and skipped. Writes
/// `scores.csv` and `summary.csv`; configurations are labelled by their
/// grid values other than `seed` and `env`.
pub fn sweep(base: &ConfigBuilder, axes: &[GridAxis], root: &Path) -> Result<SweepOutcome> {
    fs::create_dir_all(root)?;
    let mut outcome = SweepOutcome::default();
    for cell in cells(axes) {
        let name = if cell.is_empty() {
            "base".to_string()
        } else {
            cell.iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join("_")
        };
        let label = cell
            .iter()
            .filter(|(k, _)| k != "seed" && k != "env")
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ");
        let label = if label.is_empty() {
            "base".to_string()
        } else {
            label
        };
        let dir = root.join(&name);
        let result = (|| {
            let mut builder = base.clone();
            for (k, v) in &cell {
                builder.set(k, v)?;
            }
            builder.set("out-dir", &dir.display().to_string())?;
            let config = builder.build()?;
            let records = run_to_dir(&config, &dir)?;
            score_row(&config, &label, &records)
        })();
        match result {
            Ok(row) => {
                outcome.completed += 1;
                outcome.scores.push(row);
            }
            Err(e) => {
                eprintln!("cell {name} failed: {e}");
                outcome.failed.push((name, e.to_string()));
            }
        }
    }
    fs::write(root.join("scores.csv"), outcome.scores.to_csv())?;
    fs::write(
        root.join("summary.csv"),
        crate::metrics::summary_csv(&outcome.scores.summary()),
    )?;
    if !outcome.failed.is_empty() {
        let text: String = outcome
            .failed
            .iter()
            .map(|(name, err)| format!("{name}: {err}\n"))
            .collect();
        fs::write(root.join("failures.txt"), text)?;
    }
    Ok(outcome)
}

/// Writes `isweight.csv`: the avg-IS diagnostic and every batch weight per
/// iteration, one column per lag.
pub(super) fn write_isweight(dir: &Path, records: &[IterationRecord], lags: usize) -> Result<()> {
    let mut text = String::from("iteration,avg_is");
    for l in 0..lags {
        let _ = write!(text, ",batch_weight_lag{l}");
    }
    text.push('\n');
    for r in records {
        let _ = write!(text, "{},{}", r.iteration, r.avg_is);
        for l in 0..lags {
            text.push(',');
            if let Some(w) = r.batch_avg_is.get(l) {
                let _ = write!(text, "{w}");
            }
        }
        text.push('\n');
    }
    fs::write(dir.join("isweight.csv"), text)?;
    Ok(())
}

/// Mean of the lag-1 batch weight over the iterations that have one.
pub fn mean_lag1_weight(records: &[IterationRecord]) -> Option<f64> {
    let weights: Vec<f64> = records
        .iter()
        .filter_map(|r| r.batch_avg_is.get(1).copied())
        .collect();
    (!weights.is_empty()).then(|| weights.iter().sum::<f64>() / weights.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthRow {
    pub k: usize,
    pub mean_lag1: f64,
}

/// Trains synth-K for every `k` and writes one summary row per K to
/// `synth_k.csv` under `root`.
pub fn synth_sweep(base: &ConfigBuilder, ks: &[usize], root: &Path) -> Result<Vec<SynthRow>> {
    fs::create_dir_all(root)?;
    let mut rows = Vec::new();
    for &k in ks {
        let dir = root.join(format!("synth-{k}"));
        let mut builder = base.clone();
        builder.set("env", &format!("synth-{k}"))?;
        builder.set("out-dir", &dir.display().to_string())?;
        let config = builder.build()?;
        let records = run_to_dir(&config, &dir)?;
        write_isweight(&dir, &records, config.replay_length)?;
        let mean_lag1 = mean_lag1_weight(&records).ok_or_else(|| {
            Error::config(
                "replay-length",
                "needs at least 2 stored batches for a lag-1 weight",
            )
        })?;
        rows.push(SynthRow { k, mean_lag1 });
    }
    let mut text = String::from("k,mean_lag1_batch_weight\n");
    for row in &rows {
        let _ = writeln!(text, "{},{}", row.k, row.mean_lag1);
    }
    fs::write(root.join("synth_k.csv"), text)?;
    Ok(rows)
}
