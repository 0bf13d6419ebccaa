//! Clipped surrogate, value regression and the combined objective
//! `L = L_clip - c_v·L_V` with exact gradients.

use crate::error::{check_dim, Error, Result};
use crate::policy::{log_density, log_density_grad, PolicyParams, ValueParams};
use crate::scalar::Scalar;

const ADVANTAGE_STD_EPS: f64 = 1e-8;

/// `M` replayed samples, row-major. `stds` repeats the rollout-time σ of
/// each sample's batch.
#[derive(Debug, Clone, PartialEq)]
pub struct MiniBatch<S> {
    pub state_dim: usize,
    pub action_dim: usize,
    pub states: Vec<S>,
    pub actions: Vec<S>,
    pub advantages: Vec<S>,
    pub targets: Vec<S>,
    pub means: Vec<S>,
    pub stds: Vec<S>,
}

impl<S: Scalar> MiniBatch<S> {
    pub fn new(state_dim: usize, action_dim: usize) -> Self {
        Self {
            state_dim,
            action_dim,
            states: Vec::new(),
            actions: Vec::new(),
            advantages: Vec::new(),
            targets: Vec::new(),
            means: Vec::new(),
            stds: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.advantages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.advantages.is_empty()
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        state: &[S],
        action: &[S],
        advantage: S,
        target: S,
        mean: &[S],
        std: &[S],
    ) {
        self.states.extend_from_slice(state);
        self.actions.extend_from_slice(action);
        self.advantages.push(advantage);
        self.targets.push(target);
        self.means.extend_from_slice(mean);
        self.stds.extend_from_slice(std);
    }

    fn row<'a>(&self, data: &'a [S], m: usize) -> &'a [S] {
        &data[m * self.action_dim..(m + 1) * self.action_dim]
    }

    pub fn state(&self, m: usize) -> &[S] {
        &self.states[m * self.state_dim..(m + 1) * self.state_dim]
    }

    pub fn action(&self, m: usize) -> &[S] {
        self.row(&self.actions, m)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.len();
        if m == 0 {
            return Err(Error::DimensionMismatch {
                what: "mini-batch size",
                expected: 1,
                got: 0,
            });
        }
        check_dim("mini-batch states", m * self.state_dim, self.states.len())?;
        check_dim(
            "mini-batch actions",
            m * self.action_dim,
            self.actions.len(),
        )?;
        check_dim("mini-batch targets", m, self.targets.len())?;
        check_dim("mini-batch means", m * self.action_dim, self.means.len())?;
        check_dim("mini-batch stds", m * self.action_dim, self.stds.len())?;
        Ok(())
    }

    /// Same samples with advantages standardized to mean 0, std 1.
    pub fn with_normalized_advantages(&self) -> Self {
        let mut out = self.clone();
        out.advantages = normalize_advantages(&self.advantages);
        out
    }
}

/// `(a - mean) / (std + 1e-8)` using the population standard deviation.
pub fn normalize_advantages<S: Scalar>(advantages: &[S]) -> Vec<S> {
    let n = S::of(advantages.len() as f64);
    let mean = advantages.iter().fold(S::zero(), |acc, &a| acc + a) / n;
    let var = advantages
        .iter()
        .fold(S::zero(), |acc, &a| acc + (a - mean) * (a - mean))
        / n;
    let scale = var.sqrt() + S::of(ADVANTAGE_STD_EPS);
    advantages.iter().map(|&a| (a - mean) / scale).collect()
}

/// `max(min(x, 1 + ε), 1 - ε)`
pub fn clip<S: Scalar>(x: S, eps: S) -> S {
    x.min(S::one() + eps).max(S::one() - eps)
}

/// Importance weights of every sample under `policy` against the stored
/// rollout statistics.
pub fn ratios<S: Scalar>(batch: &MiniBatch<S>, policy: &PolicyParams<S>) -> Result<Vec<S>> {
    batch.validate()?;
    let tape = policy.mean.forward_batch(&batch.states, batch.len())?;
    Ok(ratios_from_means(batch, policy, tape.output()))
}

fn ratios_from_means<S: Scalar>(
    batch: &MiniBatch<S>,
    policy: &PolicyParams<S>,
    means: &[S],
) -> Vec<S> {
    let std = policy.std();
    (0..batch.len())
        .map(|m| {
            let action = batch.action(m);
            let new = log_density(batch.row(means, m), &std, action);
            let old = log_density(
                batch.row(&batch.means, m),
                batch.row(&batch.stds, m),
                action,
            );
            (new - old).exp()
        })
        .collect()
}

/// `(1/M) Σ min(R_m·Â_m, clip(R_m)·Â_m)` on the advantages as stored in the batch.
pub fn surrogate<S: Scalar>(batch: &MiniBatch<S>, policy: &PolicyParams<S>, eps: S) -> Result<S> {
    let r = ratios(batch, policy)?;
    Ok(surrogate_from_ratios(&r, &batch.advantages, eps))
}

fn surrogate_from_ratios<S: Scalar>(ratios: &[S], advantages: &[S], eps: S) -> S {
    let sum = ratios
        .iter()
        .zip(advantages)
        .fold(S::zero(), |acc, (&r, &a)| {
            acc + (r * a).min(clip(r, eps) * a)
        });
    sum / S::of(ratios.len() as f64)
}

/// `(1/M) Σ (V(s_m) - V̂_m)²`
pub fn value_loss<S: Scalar>(batch: &MiniBatch<S>, value: &ValueParams<S>) -> Result<S> {
    batch.validate()?;
    let v = value.values(&batch.states, batch.len())?;
    Ok(mean_squared_error(&v, &batch.targets))
}

fn mean_squared_error<S: Scalar>(values: &[S], targets: &[S]) -> S {
    let sum = values
        .iter()
        .zip(targets)
        .fold(S::zero(), |acc, (&v, &t)| acc + (v - t) * (v - t));
    sum / S::of(values.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig<S> {
    pub clip: S,
    pub value_coef: S,
    pub normalize_advantages: bool,
}

/// Objective value, its parts and its gradient (ascent direction).
#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput<S> {
    pub objective: S,
    pub surrogate: S,
    pub value_loss: S,
    /// Gradient over the mean network, laid out like its parameters,
    /// followed by the `log_std` gradient.
    pub policy_grad: Vec<S>,
    pub value_grad: Vec<S>,
    /// Importance weights before the update.
    pub ratios: Vec<S>,
}

/// Evaluates `L_clip - c_v·L_V` and its exact gradient.
///
/// Where the min picks the clipped branch with the ratio outside
/// `[1 - ε, 1 + ε]`, no gradient flows through that sample's ratio. A ratio
/// exactly on the band edge counts as unclipped.
pub fn combined_loss_and_grad<S: Scalar>(
    batch: &MiniBatch<S>,
    policy: &PolicyParams<S>,
    value: &ValueParams<S>,
    config: &LossConfig<S>,
) -> Result<LossOutput<S>> {
    batch.validate()?;
    let m_count = batch.len();
    let inv_m = S::one() / S::of(m_count as f64);
    let k_dim = batch.action_dim;
    let advantages = if config.normalize_advantages {
        normalize_advantages(&batch.advantages)
    } else {
        batch.advantages.clone()
    };

    // Policy half.
    let policy_tape = policy.mean.forward_batch(&batch.states, m_count)?;
    let new_means = policy_tape.output();
    let ratios = ratios_from_means(batch, policy, new_means);
    let surrogate = surrogate_from_ratios(&ratios, &advantages, config.clip);

    let std = policy.std();
    let mut mean_out_grad = vec![S::zero(); m_count * k_dim];
    let mut log_std_grad = vec![S::zero(); k_dim];
    let mut d_mean = vec![S::zero(); k_dim];
    let mut d_log_std = vec![S::zero(); k_dim];
    for m in 0..m_count {
        let (r, a) = (ratios[m], advantages[m]);
        if !r.is_finite() {
            return Err(Error::NonFinite {
                what: "importance weight",
                detail: format!("sample {m}: ratio {r}, advantage {a}"),
            });
        }
        let unclipped = r * a <= clip(r, config.clip) * a;
        if !unclipped {
            continue;
        }
        // dJ/dR_m = Â_m / M, and dR/dθ = R·d log π/dθ.
        let scale = a * inv_m * r;
        log_density_grad(
            batch.row(new_means, m),
            &std,
            batch.action(m),
            &mut d_mean,
            &mut d_log_std,
        );
        for k in 0..k_dim {
            mean_out_grad[m * k_dim + k] = scale * d_mean[k];
            log_std_grad[k] = log_std_grad[k] + scale * d_log_std[k];
        }
    }
    let mut policy_grad = vec![S::zero(); policy.mean.len()];
    policy
        .mean
        .backward_batch(&policy_tape, &mean_out_grad, &mut policy_grad, false)?;
    policy_grad.extend_from_slice(&log_std_grad);

    // Value half.
    let value_tape = value.net.forward_batch(&batch.states, m_count)?;
    let values = value_tape.output();
    let value_loss = mean_squared_error(values, &batch.targets);
    let two = S::of(2.0);
    let value_out_grad: Vec<S> = values
        .iter()
        .zip(&batch.targets)
        .map(|(&v, &t)| -config.value_coef * two * (v - t) * inv_m)
        .collect();
    let mut value_grad = vec![S::zero(); value.net.len()];
    value
        .net
        .backward_batch(&value_tape, &value_out_grad, &mut value_grad, false)?;

    let objective = surrogate - config.value_coef * value_loss;
    if !objective.is_finite() {
        return Err(Error::NonFinite {
            what: "objective",
            detail: format!("surrogate {surrogate}, value loss {value_loss}"),
        });
    }
    Ok(LossOutput {
        objective,
        surrogate,
        value_loss,
        policy_grad,
        value_grad,
        ratios,
    })
}
