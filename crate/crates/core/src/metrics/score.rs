//! Normalized scores across a compared set of runs.
//!
//! For every task, each run's raw score is min-max normalized against all
//! runs of that task in the table. A configuration's per-task score is the
//! mean over its seeds; its ANS is the unweighted mean over tasks. When every
//! run of a task scored the same, all of them get NS = 1.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// `(raw - min) / (max - min)`
pub fn normalized_score(raw: f64, min: f64, max: f64) -> Result<f64> {
    if max.partial_cmp(&min) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::DegenerateRange { min, max });
    }
    Ok((raw - min) / (max - min))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub task: String,
    pub config: String,
    pub seed: u64,
    /// Mean return of the final 100 episodes.
    pub final_score: f64,
    /// Mean return over all episodes.
    pub all_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub config: String,
    pub final_ans: f64,
    pub speed_ans: f64,
    pub seeds: usize,
}

/// Per-seed (final, speed) normalized scores of one configuration on one task.
type SeedScores = (Vec<f64>, Vec<f64>);

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    rows: Vec<ScoreRow>,
}

impl ScoreTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: ScoreRow) {
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[ScoreRow] {
        &self.rows
    }

    /// Per-configuration ANS, ranked by final ANS (descending).
    pub fn summary(&self) -> Vec<SummaryRow> {
        let final_ns = self.normalized(|r| r.final_score);
        let speed_ns = self.normalized(|r| r.all_score);

        let mut per_config: BTreeMap<&str, BTreeMap<&str, SeedScores>> = BTreeMap::new();
        for (i, row) in self.rows.iter().enumerate() {
            let cell = per_config
                .entry(&row.config)
                .or_default()
                .entry(&row.task)
                .or_default();
            cell.0.push(final_ns[i]);
            cell.1.push(speed_ns[i]);
        }

        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        let mut summary: Vec<SummaryRow> = per_config
            .into_iter()
            .map(|(config, tasks)| {
                let finals: Vec<f64> = tasks.values().map(|(f, _)| mean(f)).collect();
                let speeds: Vec<f64> = tasks.values().map(|(_, s)| mean(s)).collect();
                let seeds = tasks.values().map(|(f, _)| f.len()).max().unwrap_or(0);
                SummaryRow {
                    config: config.to_string(),
                    final_ans: mean(&finals),
                    speed_ans: mean(&speeds),
                    seeds,
                }
            })
            .collect();
        summary.sort_by(|a, b| b.final_ans.total_cmp(&a.final_ans));
        summary
    }

    fn normalized(&self, score: impl Fn(&ScoreRow) -> f64) -> Vec<f64> {
        let mut range: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
        for row in &self.rows {
            let s = score(row);
            let r = range.entry(&row.task).or_insert((s, s));
            r.0 = r.0.min(s);
            r.1 = r.1.max(s);
        }
        self.rows
            .iter()
            .map(|row| {
                let (min, max) = range[row.task.as_str()];
                normalized_score(score(row), min, max).unwrap_or(1.0)
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("task,config,seed,final_score,all_score\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.task, r.config, r.seed, r.final_score, r.all_score
            ));
        }
        out
    }
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("rank,config,final_ans,speed_ans,seeds\n");
    for (i, r) in rows.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            i + 1,
            r.config,
            r.final_ans,
            r.speed_ans,
            r.seeds
        ));
    }
    out
}
