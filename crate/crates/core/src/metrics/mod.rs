//! Per-iteration diagnostics, episode tracking and cross-run scores.

mod record;
mod score;

use std::collections::VecDeque;

pub use record::{IterationRecord, MetricsWriter, METRICS_SCHEMA_VERSION};
pub use score::{normalized_score, summary_csv, ScoreRow, ScoreTable, SummaryRow};

use crate::replay::avg_abs_deviation;
use crate::scalar::Scalar;

/// Episodes averaged for the "recent return" statistic.
pub const RECENT_EPISODES: usize = 100;

/// Mean of `1 + |1 - R_m|` over every ratio seen by the iteration's
/// mini-batches.
pub fn avg_is_diag<S: Scalar>(ratios: &[S]) -> S {
    avg_abs_deviation(ratios)
}

/// Streaming form of [`avg_is_diag`].
#[derive(Debug, Clone, Default)]
pub struct AvgIsAccumulator {
    sum: f64,
    count: u64,
}

impl AvgIsAccumulator {
    pub fn add<S: Scalar>(&mut self, ratios: &[S]) {
        for &r in ratios {
            self.sum += 1.0 + (1.0 - r.f64()).abs();
        }
        self.count += ratios.len() as u64;
    }

    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }
}

/// Returns of completed episodes only.
#[derive(Debug, Clone, Default)]
pub struct EpisodeTracker {
    current: f64,
    recent: VecDeque<f64>,
    total: f64,
    completed: u64,
}

impl EpisodeTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn step(&mut self, reward: f64, done: bool) {
        self.current += reward;
        if done {
            if self.recent.len() == RECENT_EPISODES {
                self.recent.pop_front();
            }
            self.recent.push_back(self.current);
            self.total += self.current;
            self.completed += 1;
            self.current = 0.0;
        }
    }

    pub fn completed(&self) -> u64 {
        self.completed
    }

    /// Mean return of the last 100 completed episodes.
    pub fn recent_mean(&self) -> Option<f64> {
        (!self.recent.is_empty())
            .then(|| self.recent.iter().sum::<f64>() / self.recent.len() as f64)
    }

    /// Mean return over every completed episode.
    pub fn overall_mean(&self) -> Option<f64> {
        (self.completed > 0).then(|| self.total / self.completed as f64)
    }
}
