//! Diagonal Gaussian policy with a state-independent log standard deviation,
//! and the state-value network.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Result};
use crate::net::MlpParams;
use crate::scalar::Scalar;

const POLICY_OUTPUT_GAIN: f64 = 0.01;
const VALUE_OUTPUT_GAIN: f64 = 1.0;

/// `θ = (φ, log σ)`: mean network plus one learned log-std per action dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams<S> {
    pub mean: MlpParams<S>,
    pub log_std: Vec<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueParams<S> {
    pub net: MlpParams<S>,
}

/// Mean and standard deviation of the action distribution at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats<S> {
    pub mean: Vec<S>,
    pub std: Vec<S>,
}

impl<S: Scalar> PolicyParams<S> {
    pub fn init<R: Rng + ?Sized>(state_dim: usize, action_dim: usize, rng: &mut R) -> Self {
        Self {
            mean: MlpParams::orthogonal(state_dim, action_dim, POLICY_OUTPUT_GAIN, rng),
            log_std: vec![S::zero(); action_dim],
        }
    }

    pub fn zeros(state_dim: usize, action_dim: usize) -> Self {
        Self {
            mean: MlpParams::zeros(state_dim, action_dim),
            log_std: vec![S::zero(); action_dim],
        }
    }

    pub fn state_dim(&self) -> usize {
        self.mean.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn std(&self) -> Vec<S> {
        self.log_std.iter().map(|l| l.exp()).collect()
    }

    /// Number of scalars in the flattened `(mean net, log_std)` vector.
    pub fn len(&self) -> usize {
        self.mean.len() + self.log_std.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stats(&self, state: &[S]) -> Result<GaussianStats<S>> {
        Ok(GaussianStats {
            mean: self.mean.forward(state)?,
            std: self.std(),
        })
    }
}

impl<S: Scalar> ValueParams<S> {
    pub fn init<R: Rng + ?Sized>(state_dim: usize, rng: &mut R) -> Self {
        Self {
            net: MlpParams::orthogonal(state_dim, 1, VALUE_OUTPUT_GAIN, rng),
        }
    }

    pub fn zeros(state_dim: usize) -> Self {
        Self {
            net: MlpParams::zeros(state_dim, 1),
        }
    }

    pub fn value(&self, state: &[S]) -> Result<S> {
        Ok(self.net.forward(state)?[0])
    }

    /// Values of `rows` states stored row-major.
    pub fn values(&self, states: &[S], rows: usize) -> Result<Vec<S>> {
        Ok(self.net.forward_batch(states, rows)?.output().to_vec())
    }
}

impl<S: Scalar> GaussianStats<S> {
    /// `a_k = μ_k + σ_k·z_k` with standard-normal `z_k`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<S> {
        self.mean
            .iter()
            .zip(&self.std)
            .map(|(&m, &s)| {
                let z: f64 = rng.sample(StandardNormal);
                m + s * S::of(z)
            })
            .collect()
    }

    pub fn log_prob(&self, action: &[S]) -> S {
        log_density(&self.mean, &self.std, action)
    }
}

/// `Σ_k -½·log 2π - log σ_k - (a_k - μ_k)²/(2σ_k²)`.
pub fn log_density<S: Scalar>(mean: &[S], std: &[S], action: &[S]) -> S {
    let half = S::of(0.5);
    let half_log_two_pi = S::of(0.5 * (2.0 * std::f64::consts::PI).ln());
    mean.iter()
        .zip(std)
        .zip(action)
        .fold(S::zero(), |acc, ((&m, &s), &a)| {
            let z = (a - m) / s;
            acc - half_log_two_pi - s.ln() - half * z * z
        })
}

/// Per-dimension `(∂/∂μ_k, ∂/∂log σ_k)` of the log-density, written into the
/// two output slices.
pub fn log_density_grad<S: Scalar>(
    mean: &[S],
    std: &[S],
    action: &[S],
    d_mean: &mut [S],
    d_log_std: &mut [S],
) {
    for k in 0..mean.len() {
        let z = (action[k] - mean[k]) / std[k];
        d_mean[k] = z / std[k];
        d_log_std[k] = z * z - S::one();
    }
}

/// `log π_new(a|s) - log π_old(a|s)` with `π_old` given by stored statistics.
pub fn log_is_ratio<S: Scalar>(
    policy: &PolicyParams<S>,
    stored: &GaussianStats<S>,
    state: &[S],
    action: &[S],
) -> Result<S> {
    check_dim("action", policy.action_dim(), action.len())?;
    let current = policy.stats(state)?;
    Ok(current.log_prob(action) - stored.log_prob(action))
}

/// Importance weight `π_new(a|s) / π_old(a|s)`, exponentiated once from log space.
pub fn is_ratio<S: Scalar>(
    policy: &PolicyParams<S>,
    stored: &GaussianStats<S>,
    state: &[S],
    action: &[S],
) -> Result<S> {
    Ok(log_is_ratio(policy, stored, state, action)?.exp())
}
