//! Replay memory of the most recent rollout batches, batch-average importance
//! weights and adaptive batch selection.

use std::collections::VecDeque;

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::estimation::{EstimatedBatch, Trajectory};
use crate::loss::MiniBatch;
use crate::policy::{log_density, PolicyParams};
use crate::scalar::Scalar;

/// One iteration's rollout with frozen advantages and targets.
///
/// The policy mean is kept per sample; σ is kept once for the batch since
/// the policy's standard deviation does not depend on the state.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredBatch<S> {
    pub iteration: u64,
    pub state_dim: usize,
    pub action_dim: usize,
    pub states: Vec<S>,
    pub actions: Vec<S>,
    pub advantages: Vec<S>,
    pub targets: Vec<S>,
    pub means: Vec<S>,
    pub std: Vec<S>,
    pub active: bool,
}

impl<S: Scalar> StoredBatch<S> {
    pub fn from_rollout(iteration: u64, traj: &Trajectory<S>, est: &EstimatedBatch<S>) -> Self {
        let n = traj.len();
        Self {
            iteration,
            state_dim: traj.state_dim,
            action_dim: traj.action_dim,
            states: traj.states[..n * traj.state_dim].to_vec(),
            actions: traj.actions.clone(),
            advantages: est.advantages.clone(),
            targets: est.targets.clone(),
            means: traj.means.clone(),
            std: traj.std.clone(),
            active: true,
        }
    }

    pub fn len(&self) -> usize {
        self.advantages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.advantages.is_empty()
    }

    pub fn state(&self, n: usize) -> &[S] {
        &self.states[n * self.state_dim..(n + 1) * self.state_dim]
    }

    pub fn action(&self, n: usize) -> &[S] {
        &self.actions[n * self.action_dim..(n + 1) * self.action_dim]
    }

    pub fn mean(&self, n: usize) -> &[S] {
        &self.means[n * self.action_dim..(n + 1) * self.action_dim]
    }

    /// Per-sample importance weights of `policy` against this batch's
    /// rollout statistics.
    pub fn ratios(&self, policy: &PolicyParams<S>) -> Result<Vec<S>> {
        let tape = policy.mean.forward_batch(&self.states, self.len())?;
        let new_means = tape.output();
        let std = policy.std();
        let k = self.action_dim;
        Ok((0..self.len())
            .map(|n| {
                let a = self.action(n);
                let new = log_density(&new_means[n * k..(n + 1) * k], &std, a);
                let old = log_density(self.mean(n), &self.std, a);
                (new - old).exp()
            })
            .collect())
    }
}

/// Ring of at most `capacity` batches, oldest first.
#[derive(Debug, Clone)]
pub struct ReplayMemory<S> {
    capacity: usize,
    batches: VecDeque<StoredBatch<S>>,
}

impl<S: Scalar> ReplayMemory<S> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "replay length must be at least 1");
        Self {
            capacity,
            batches: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.batches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batches.is_empty()
    }

    /// Appends the newest batch, evicting the oldest beyond capacity.
    pub fn push_batch(&mut self, batch: StoredBatch<S>) -> Result<()> {
        if let Some(last) = self.batches.back() {
            if batch.iteration != last.iteration + 1 {
                return Err(Error::OutOfOrderBatch {
                    last: last.iteration,
                    expected: last.iteration + 1,
                    got: batch.iteration,
                });
            }
        }
        self.batches.push_back(batch);
        if self.batches.len() > self.capacity {
            self.batches.pop_front();
        }
        Ok(())
    }

    /// Batch `B_{i-lag}`; lag 0 is the newest.
    pub fn by_lag(&self, lag: usize) -> Option<&StoredBatch<S>> {
        self.batches
            .len()
            .checked_sub(lag + 1)
            .map(|i| &self.batches[i])
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &StoredBatch<S>> {
        self.batches.iter()
    }

    pub fn iterations(&self) -> Vec<u64> {
        self.batches.iter().map(|b| b.iteration).collect()
    }

    pub fn active_count(&self) -> usize {
        self.batches.iter().filter(|b| b.active).count()
    }

    pub fn active_samples(&self) -> usize {
        self.batches
            .iter()
            .filter(|b| b.active)
            .map(|b| b.len())
            .sum()
    }

    fn active_batches(&self) -> Vec<&StoredBatch<S>> {
        self.batches.iter().filter(|b| b.active).collect()
    }

    /// Records of the given flat indices into the concatenated active pool.
    fn gather(&self, picks: impl IntoIterator<Item = usize>) -> MiniBatch<S> {
        let active = self.active_batches();
        let first = active[0];
        let mut out = MiniBatch::new(first.state_dim, first.action_dim);
        for flat in picks {
            let mut rest = flat;
            let mut batch = active[0];
            for b in &active {
                if rest < b.len() {
                    batch = b;
                    break;
                }
                rest -= b.len();
            }
            out.push(
                batch.state(rest),
                batch.action(rest),
                batch.advantages[rest],
                batch.targets[rest],
                batch.mean(rest),
                &batch.std,
            );
        }
        out
    }
}

/// `R' = (1/N) Σ_n 1 + |1 - R_n|` over every sample of the batch.
pub fn batch_avg_is<S: Scalar>(policy: &PolicyParams<S>, batch: &StoredBatch<S>) -> Result<S> {
    Ok(avg_abs_deviation(&batch.ratios(policy)?))
}

/// Mean of `1 + |1 - r|`.
pub fn avg_abs_deviation<S: Scalar>(ratios: &[S]) -> S {
    let sum = ratios
        .iter()
        .fold(S::zero(), |acc, &r| acc + S::one() + (S::one() - r).abs());
    sum / S::of(ratios.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection<S> {
    /// `R'_{i,l}` indexed by lag `l` (0 = newest batch).
    pub batch_avg_is: Vec<S>,
    /// Activity indexed by lag.
    pub active: Vec<bool>,
    /// Mini-batch size `M = M_PPO × #active`.
    pub minibatch_size: usize,
}

impl<S> Selection<S> {
    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }
}

/// Evaluates `R'` of every stored batch against the current policy and marks
/// batches active.
///
/// Adaptive: a batch stays active iff `R' <= 1 + ε_b`; the newest batch is
/// always kept. Otherwise every stored batch is active.
pub fn select_active<S: Scalar>(
    memory: &mut ReplayMemory<S>,
    policy: &PolicyParams<S>,
    batch_drop: S,
    adaptive: bool,
    base_minibatch: usize,
) -> Result<Selection<S>> {
    let stored = memory.len();
    let mut r_prime = Vec::with_capacity(stored);
    let mut active = Vec::with_capacity(stored);
    let threshold = S::one() + batch_drop;
    for lag in 0..stored {
        let batch = memory.by_lag(lag).expect("lag within memory");
        let r = batch_avg_is(policy, batch)?;
        r_prime.push(r);
        active.push(!adaptive || lag == 0 || r <= threshold);
    }
    for (lag, &a) in active.iter().enumerate() {
        let idx = stored - 1 - lag;
        memory.batches[idx].active = a;
    }
    let count = active.iter().filter(|&&a| a).count();
    Ok(Selection {
        batch_avg_is: r_prime,
        active,
        minibatch_size: base_minibatch * count,
    })
}

/// `size` distinct samples drawn uniformly from the union of active batches.
pub fn sample_minibatch<S: Scalar, R: Rng + ?Sized>(
    memory: &ReplayMemory<S>,
    size: usize,
    rng: &mut R,
) -> Result<MiniBatch<S>> {
    let pool = memory.active_samples();
    if size > pool || size == 0 {
        return Err(Error::PoolTooSmall {
            requested: size,
            available: pool,
        });
    }
    let picks = index::sample(rng, pool, size);
    Ok(memory.gather(picks.iter()))
}

/// `size` consecutive samples of the concatenated active pool starting at a
/// uniform offset; the episodic-style comparison sampler.
pub fn sample_contiguous<S: Scalar, R: Rng + ?Sized>(
    memory: &ReplayMemory<S>,
    size: usize,
    rng: &mut R,
) -> Result<MiniBatch<S>> {
    let pool = memory.active_samples();
    if size > pool || size == 0 {
        return Err(Error::PoolTooSmall {
            requested: size,
            available: pool,
        });
    }
    let start = rng.random_range(0..=pool - size);
    Ok(memory.gather(start..start + size))
}
