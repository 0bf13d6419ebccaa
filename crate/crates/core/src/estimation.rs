//! Advantage and value-target estimation from a fixed-horizon rollout.

use crate::error::{check_dim, Error, Result};
use crate::policy::{GaussianStats, ValueParams};
use crate::scalar::Scalar;

/// One horizon of interaction, stored flat and row-major.
///
/// `states` holds `len + 1` rows: the state before every step plus the
/// bootstrap state after the last one. When step `t` ends an episode,
/// `states[t + 1]` is the first state of the next episode; the true
/// successor of a step-limit cut is kept in `timeout_states` for optional
/// bootstrapping.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub state_dim: usize,
    pub action_dim: usize,
    pub states: Vec<S>,
    pub actions: Vec<S>,
    pub rewards: Vec<S>,
    pub dones: Vec<bool>,
    pub timeouts: Vec<bool>,
    pub timeout_states: Vec<Option<Vec<S>>>,
    /// Policy mean at every step.
    pub means: Vec<S>,
    /// Policy standard deviation for the whole rollout.
    pub std: Vec<S>,
}

impl<S: Scalar> Trajectory<S> {
    pub fn new(state_dim: usize, action_dim: usize, initial_state: &[S], std: Vec<S>) -> Self {
        Self {
            state_dim,
            action_dim,
            states: initial_state.to_vec(),
            actions: Vec::new(),
            rewards: Vec::new(),
            dones: Vec::new(),
            timeouts: Vec::new(),
            timeout_states: Vec::new(),
            means: Vec::new(),
            std,
        }
    }

    /// Number of steps.
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        action: &[S],
        mean: &[S],
        reward: S,
        done: bool,
        timeout: bool,
        timeout_state: Option<Vec<S>>,
        next_state: &[S],
    ) {
        self.actions.extend_from_slice(action);
        self.means.extend_from_slice(mean);
        self.rewards.push(reward);
        self.dones.push(done);
        self.timeouts.push(timeout);
        self.timeout_states.push(timeout_state);
        self.states.extend_from_slice(next_state);
    }

    pub fn state(&self, t: usize) -> &[S] {
        &self.states[t * self.state_dim..(t + 1) * self.state_dim]
    }

    pub fn action(&self, t: usize) -> &[S] {
        &self.actions[t * self.action_dim..(t + 1) * self.action_dim]
    }

    pub fn stats(&self, t: usize) -> GaussianStats<S> {
        GaussianStats {
            mean: self.means[t * self.action_dim..(t + 1) * self.action_dim].to_vec(),
            std: self.std.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        check_dim(
            "trajectory states",
            (n + 1) * self.state_dim,
            self.states.len(),
        )?;
        check_dim(
            "trajectory actions",
            n * self.action_dim,
            self.actions.len(),
        )?;
        check_dim("trajectory means", n * self.action_dim, self.means.len())?;
        check_dim("trajectory dones", n, self.dones.len())?;
        check_dim("trajectory timeouts", n, self.timeouts.len())?;
        check_dim("trajectory timeout states", n, self.timeout_states.len())?;
        check_dim("trajectory std", self.action_dim, self.std.len())?;
        if let Some(t) = self.rewards.iter().position(|r| !r.is_finite()) {
            return Err(Error::NonFinite {
                what: "reward",
                detail: format!("step {t}"),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedBatch<S> {
    pub advantages: Vec<S>,
    pub targets: Vec<S>,
}

/// TD residuals `δ_t = r_t + γ·V(s_{t+1}) - V(s_t)` with the bootstrap
/// dropped at episode ends. `values` are the `len + 1` state values.
/// `timeout_values[t]` is the value of the true successor of a step-limit
/// cut and is only read when `bootstrap_on_timeout` is set.
pub fn deltas_from_values<S: Scalar>(
    traj: &Trajectory<S>,
    values: &[S],
    timeout_values: &[Option<S>],
    gamma: S,
    bootstrap_on_timeout: bool,
) -> Vec<S> {
    (0..traj.len())
        .map(|t| {
            let next = if !traj.dones[t] {
                values[t + 1]
            } else if bootstrap_on_timeout && traj.timeouts[t] {
                timeout_values[t].unwrap_or_else(S::zero)
            } else {
                S::zero()
            };
            traj.rewards[t] + gamma * next - values[t]
        })
        .collect()
}

fn state_values<S: Scalar>(
    traj: &Trajectory<S>,
    value: &ValueParams<S>,
    bootstrap_on_timeout: bool,
) -> Result<(Vec<S>, Vec<Option<S>>)> {
    traj.validate()?;
    let values = value.values(&traj.states, traj.len() + 1)?;
    let timeout_values = traj
        .timeout_states
        .iter()
        .enumerate()
        .map(|(t, s)| match s {
            Some(s) if bootstrap_on_timeout && traj.timeouts[t] => value.value(s).map(Some),
            _ => Ok(None),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((values, timeout_values))
}

pub fn compute_deltas<S: Scalar>(
    traj: &Trajectory<S>,
    value: &ValueParams<S>,
    gamma: S,
    bootstrap_on_timeout: bool,
) -> Result<Vec<S>> {
    let (values, timeout_values) = state_values(traj, value, bootstrap_on_timeout)?;
    Ok(deltas_from_values(
        traj,
        &values,
        &timeout_values,
        gamma,
        bootstrap_on_timeout,
    ))
}

/// Backward recursion `Â_t = δ_t + γλ·Â_{t+1}`, restarted after every
/// `done` and truncated at the end of the horizon.
pub fn compute_gae<S: Scalar>(deltas: &[S], dones: &[bool], gamma: S, lambda: S) -> Vec<S> {
    let decay = gamma * lambda;
    let mut advantages = vec![S::zero(); deltas.len()];
    let mut running = S::zero();
    for t in (0..deltas.len()).rev() {
        let carry = if dones[t] { S::zero() } else { running };
        running = deltas[t] + decay * carry;
        advantages[t] = running;
    }
    advantages
}

/// `V̂_t = Â_t + V(s_t)`.
pub fn compute_targets<S: Scalar>(advantages: &[S], values: &[S]) -> Vec<S> {
    advantages
        .iter()
        .zip(values)
        .map(|(&a, &v)| a + v)
        .collect()
}

/// Advantages and value targets for a rollout, computed once with the
/// value network as it is now.
pub fn estimate<S: Scalar>(
    traj: &Trajectory<S>,
    value: &ValueParams<S>,
    gamma: S,
    lambda: S,
    bootstrap_on_timeout: bool,
) -> Result<EstimatedBatch<S>> {
    let (values, timeout_values) = state_values(traj, value, bootstrap_on_timeout)?;
    let deltas = deltas_from_values(traj, &values, &timeout_values, gamma, bootstrap_on_timeout);
    let advantages = compute_gae(&deltas, &traj.dones, gamma, lambda);
    let targets = compute_targets(&advantages, &values[..traj.len()]);
    Ok(EstimatedBatch {
        advantages,
        targets,
    })
}
