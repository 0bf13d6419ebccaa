//! The training loop: rollout, estimation, storage, batch selection and
//! epochs of mini-batch updates.
//!
//! Sign convention: the loss module returns the gradient of the objective
//! `L_clip - c_v·L_V`, which is to be maximized. The trainer negates it and
//! hands it to Adam, which always descends.

mod config;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::estimation::{estimate, Trajectory};
use crate::loss::{combined_loss_and_grad, LossConfig};
use crate::metrics::{AvgIsAccumulator, EpisodeTracker, IterationRecord};
use crate::net::checkpoint::Checkpoint;
use crate::net::AdamState;
use crate::policy::{PolicyParams, ValueParams};
use crate::replay::{
    sample_contiguous, sample_minibatch, select_active, ReplayMemory, StoredBatch,
};
use crate::scalar::Scalar;

pub use config::{ConfigBuilder, TrainConfig, KEYS as CONFIG_KEYS, MANIFEST_KEYS};

/// `initial·(1 - step/total)`, floored at 0. Infinite values stay infinite.
pub fn schedule(initial: f64, global_step: u64, total_steps: u64) -> f64 {
    if initial.is_infinite() {
        return initial;
    }
    let remaining = 1.0 - global_step as f64 / total_steps as f64;
    (initial * remaining).max(0.0)
}

// Independent random streams derived from the run seed.
const STREAM_INIT: u64 = 0;
const STREAM_ENV: u64 = 1;
const STREAM_ACTION: u64 = 2;
const STREAM_MINIBATCH: u64 = 3;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn to_scalars<S: Scalar>(xs: &[f64]) -> Vec<S> {
    xs.iter().map(|&x| S::of(x)).collect()
}

pub struct Trainer<S> {
    config: TrainConfig,
    policy: PolicyParams<S>,
    value: ValueParams<S>,
    mean_adam: AdamState<S>,
    log_std_adam: AdamState<S>,
    value_adam: AdamState<S>,
    memory: ReplayMemory<S>,
    env: Box<dyn Environment>,
    env_rng: ChaCha8Rng,
    action_rng: ChaCha8Rng,
    minibatch_rng: ChaCha8Rng,
    observation: Vec<f64>,
    episodes: EpisodeTracker,
    global_step: u64,
    iteration: u64,
    updates: u64,
}

impl<S: Scalar> Trainer<S> {
    pub fn new(config: TrainConfig) -> Self {
        let mut env = config.env.build();
        let spec = env.spec().clone();
        let mut init_rng = stream(config.seed, STREAM_INIT);
        let policy = PolicyParams::init(spec.state_dim, spec.action_dim, &mut init_rng);
        let value = ValueParams::init(spec.state_dim, &mut init_rng);
        let mut env_rng = stream(config.seed, STREAM_ENV);
        let observation = env.reset(&mut env_rng);
        Self {
            mean_adam: AdamState::new(policy.mean.len()),
            log_std_adam: AdamState::new(policy.log_std.len()),
            value_adam: AdamState::new(value.net.len()),
            memory: ReplayMemory::new(config.replay_length),
            action_rng: stream(config.seed, STREAM_ACTION),
            minibatch_rng: stream(config.seed, STREAM_MINIBATCH),
            policy,
            value,
            env,
            env_rng,
            observation,
            episodes: EpisodeTracker::new(),
            global_step: 0,
            iteration: 0,
            updates: 0,
            config,
        }
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn policy(&self) -> &PolicyParams<S> {
        &self.policy
    }

    pub fn value(&self) -> &ValueParams<S> {
        &self.value
    }

    pub fn memory(&self) -> &ReplayMemory<S> {
        &self.memory
    }

    pub fn episodes(&self) -> &EpisodeTracker {
        &self.episodes
    }

    pub fn global_step(&self) -> u64 {
        self.global_step
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn is_finished(&self) -> bool {
        self.iteration >= self.config.iterations()
    }

    /// Runs `N` environment steps under the current policy. Episodes carry
    /// over between calls; the environment is only reset when one ends.
    pub fn collect_rollout(&mut self) -> Result<Trajectory<S>> {
        let spec = self.env.spec().clone();
        let mut traj = Trajectory::new(
            spec.state_dim,
            spec.action_dim,
            &to_scalars::<S>(&self.observation),
            self.policy.std(),
        );
        for _ in 0..self.config.horizon {
            let state: Vec<S> = to_scalars(&self.observation);
            let stats = self.policy.stats(&state)?;
            let action = stats.sample(&mut self.action_rng);
            let env_action: Vec<f64> = action.iter().map(|a| a.f64()).collect();
            let step = self.env.step(&env_action)?;
            if !step.reward.is_finite() {
                return Err(Error::NonFinite {
                    what: "reward",
                    detail: format!("global step {}", self.global_step),
                });
            }
            self.episodes.step(step.reward, step.done);
            self.global_step += 1;

            let timeout_state = (step.done && step.timeout).then(|| to_scalars(&step.next_state));
            self.observation = if step.done {
                self.env.reset(&mut self.env_rng)
            } else {
                step.next_state
            };
            traj.push(
                &action,
                &stats.mean,
                S::of(step.reward),
                step.done,
                step.timeout,
                timeout_state,
                &to_scalars::<S>(&self.observation),
            );
        }
        Ok(traj)
    }

    /// One full iteration: rollout, estimation, storage, batch selection and
    /// `S` epochs of updates.
    pub fn run_iteration(&mut self) -> Result<IterationRecord> {
        let cfg = self.config.clone();
        let start_step = self.global_step;
        let step_size = schedule(cfg.step_size, start_step, cfg.total_steps);
        let clip = schedule(cfg.clip, start_step, cfg.total_steps);
        let batch_drop = schedule(cfg.batch_drop, start_step, cfg.total_steps);

        let traj = self.collect_rollout()?;
        let est = estimate(
            &traj,
            &self.value,
            S::of(cfg.gamma),
            S::of(cfg.lambda),
            cfg.bootstrap_on_timeout,
        )?;
        self.iteration += 1;
        self.memory
            .push_batch(StoredBatch::from_rollout(self.iteration, &traj, &est))?;

        let selection = select_active(
            &mut self.memory,
            &self.policy,
            S::of(batch_drop),
            cfg.adaptive,
            cfg.minibatch,
        )?;
        let active = selection.active_count();
        let (minibatch, inner) = if cfg.fixed_minibatch {
            (cfg.minibatch, active * cfg.horizon / cfg.minibatch)
        } else {
            (selection.minibatch_size, cfg.horizon / cfg.minibatch)
        };
        debug_assert!(minibatch <= self.memory.active_samples());

        let loss_cfg = LossConfig {
            clip: S::of(clip),
            value_coef: S::of(cfg.value_coef),
            normalize_advantages: cfg.normalize_advantages,
        };
        let lr = S::of(step_size);
        let mut avg_is = AvgIsAccumulator::default();
        let (mut surrogate_sum, mut value_loss_sum) = (0.0, 0.0);
        let updates_before = self.updates;
        for _epoch in 0..cfg.epochs {
            for _ in 0..inner {
                let batch = if cfg.episodic_minibatch {
                    sample_contiguous(&self.memory, minibatch, &mut self.minibatch_rng)?
                } else {
                    sample_minibatch(&self.memory, minibatch, &mut self.minibatch_rng)?
                };
                let out = combined_loss_and_grad(&batch, &self.policy, &self.value, &loss_cfg)?;
                avg_is.add(&out.ratios);
                surrogate_sum += out.surrogate.f64();
                value_loss_sum += out.value_loss.f64();

                let n_mean = self.policy.mean.len();
                let descent = |g: &[S]| -> Vec<S> { g.iter().map(|&x| -x).collect() };
                self.mean_adam.step(
                    self.policy.mean.as_mut_slice(),
                    &descent(&out.policy_grad[..n_mean]),
                    lr,
                )?;
                self.log_std_adam.step(
                    &mut self.policy.log_std,
                    &descent(&out.policy_grad[n_mean..]),
                    lr,
                )?;
                self.value_adam.step(
                    self.value.net.as_mut_slice(),
                    &descent(&out.value_grad),
                    lr,
                )?;
                self.updates += 1;
            }
        }
        let iteration_updates = self.updates - updates_before;

        Ok(IterationRecord {
            iteration: self.iteration,
            global_step: self.global_step,
            episodes: self.episodes.completed(),
            mean_return_100: self.episodes.recent_mean(),
            mean_return_all: self.episodes.overall_mean(),
            step_size,
            clip,
            batch_drop,
            stored_batches: self.memory.len(),
            active_batches: active,
            minibatch,
            updates: self.updates,
            iteration_updates,
            avg_is: avg_is.mean().unwrap_or(1.0),
            surrogate: surrogate_sum / iteration_updates.max(1) as f64,
            value_loss: value_loss_sum / iteration_updates.max(1) as f64,
            batch_avg_is: selection.batch_avg_is.iter().map(|r| r.f64()).collect(),
        })
    }

    /// Runs the remaining iterations, handing each record to `on_record`.
    pub fn run<F>(&mut self, mut on_record: F) -> Result<()>
    where
        F: FnMut(&IterationRecord) -> Result<()>,
    {
        while !self.is_finished() {
            let record = self.run_iteration()?;
            on_record(&record)?;
        }
        Ok(())
    }

    /// Steps the environment with the current policy without learning, for
    /// untrained baselines. Returns the tracker of episodes it completed.
    pub fn evaluate_without_updates(&mut self, steps: u64) -> Result<EpisodeTracker> {
        let saved = std::mem::take(&mut self.episodes);
        let mut remaining = steps;
        while remaining > 0 {
            self.collect_rollout()?;
            remaining = remaining.saturating_sub(self.config.horizon as u64);
        }
        Ok(std::mem::replace(&mut self.episodes, saved))
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new();
        ck.insert("policy.mean", self.policy.mean.as_slice());
        ck.insert("policy.log_std", &self.policy.log_std);
        ck.insert("value", self.value.net.as_slice());
        ck
    }

    pub fn load_checkpoint(&mut self, ck: &Checkpoint) -> Result<()> {
        let mean: Vec<S> = ck.get("policy.mean")?;
        let log_std: Vec<S> = ck.get("policy.log_std")?;
        let value: Vec<S> = ck.get("value")?;
        crate::error::check_dim("checkpoint policy.mean", self.policy.mean.len(), mean.len())?;
        crate::error::check_dim(
            "checkpoint policy.log_std",
            self.policy.log_std.len(),
            log_std.len(),
        )?;
        crate::error::check_dim("checkpoint value", self.value.net.len(), value.len())?;
        self.policy.mean.as_mut_slice().copy_from_slice(&mean);
        self.policy.log_std = log_std;
        self.value.net.as_mut_slice().copy_from_slice(&value);
        Ok(())
    }
}

/// Trains from scratch and returns every iteration record.
pub fn train<S: Scalar>(config: TrainConfig) -> Result<Vec<IterationRecord>> {
    let mut trainer = Trainer::<S>::new(config);
    let mut records = Vec::new();
    trainer.run(|r| {
        records.push(r.clone());
        Ok(())
    })?;
    Ok(records)
}

#[allow(dead_code)]
fn _assert_send<S: Scalar>() {
    fn is_send<T: Send>() {}
    is_send::<Trainer<S>>();
    let _ = |r: &mut ChaCha8Rng| r.random::<u32>();
}
