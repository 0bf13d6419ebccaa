//! Native continuous-control tasks with a shared episodic interface.
//!
//! Environments simulate in `f64` regardless of the learner's scalar type.
//! Every task clamps actions to its bounds before applying them and raises
//! `done` once the per-episode step limit is reached.

mod pendulum;
mod pointmass;
mod synth;

use std::fmt;
use std::str::FromStr;

use rand::RngCore;

use crate::error::{Error, Result};

pub use pendulum::Pendulum;
pub use pointmass::PointMass;
pub use synth::SynthK;

/// Largest action dimension the synthetic family accepts.
pub const MAX_SYNTH_DIM: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub state_dim: usize,
    pub action_dim: usize,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
    pub max_episode_steps: usize,
}

impl EnvSpec {
    pub fn clamp_action(&self, action: &[f64]) -> Result<Vec<f64>> {
        crate::error::check_dim("action", self.action_dim, action.len())?;
        Ok(action
            .iter()
            .zip(self.action_low.iter().zip(&self.action_high))
            .map(|(&a, (&lo, &hi))| a.clamp(lo, hi))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_state: Vec<f64>,
    pub reward: f64,
    /// Episode over: terminal state or step limit.
    pub done: bool,
    /// `done` was raised by the step limit rather than a terminal state.
    pub timeout: bool,
}

pub trait Environment: Send {
    fn spec(&self) -> &EnvSpec;

    /// Draws an initial state and zeroes the episode step counter.
    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64>;

    fn step(&mut self, action: &[f64]) -> Result<StepResult>;
}

/// Environment identifier as written in config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnvId {
    Pendulum,
    PointMass,
    Synth(usize),
}

impl EnvId {
    pub fn build(self) -> Box<dyn Environment> {
        match self {
            EnvId::Pendulum => Box::new(Pendulum::new()),
            EnvId::PointMass => Box::new(PointMass::new()),
            EnvId::Synth(k) => Box::new(SynthK::new(k)),
        }
    }
}

impl FromStr for EnvId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pendulum" => Ok(EnvId::Pendulum),
            "pointmass" => Ok(EnvId::PointMass),
            _ => {
                let k = s
                    .strip_prefix("synth-")
                    .and_then(|k| k.parse::<usize>().ok())
                    .filter(|k| (1..=MAX_SYNTH_DIM).contains(k));
                k.map(EnvId::Synth)
                    .ok_or_else(|| Error::UnknownEnv(s.to_string()))
            }
        }
    }
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvId::Pendulum => f.write_str("pendulum"),
            EnvId::PointMass => f.write_str("pointmass"),
            EnvId::Synth(k) => write!(f, "synth-{k}"),
        }
    }
}

/// Shared step-limit bookkeeping.
#[derive(Debug, Clone, Default)]
pub(crate) struct EpisodeClock {
    steps: Option<usize>,
}

impl EpisodeClock {
    fn start(&mut self) {
        self.steps = Some(0);
    }

    /// Advances the clock; returns true when the limit is reached.
    fn tick(&mut self, limit: usize) -> Result<bool> {
        let steps = self.steps.as_mut().ok_or(Error::EnvNotReset)?;
        *steps += 1;
        Ok(*steps >= limit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn all_ids() -> Vec<EnvId> {
        vec![
            EnvId::Pendulum,
            EnvId::PointMass,
            EnvId::Synth(1),
            EnvId::Synth(5),
            EnvId::Synth(MAX_SYNTH_DIM),
        ]
    }

    #[test]
    fn ids_round_trip() {
        for id in all_ids() {
            assert_eq!(id.to_string().parse::<EnvId>().unwrap(), id);
        }
        for bad in ["synth-0", "synth-33", "synth-", "cartpole", ""] {
            assert!(bad.parse::<EnvId>().is_err(), "{bad}");
        }
    }

    #[test]
    fn specs_are_well_formed() {
        for id in all_ids() {
            let env = id.build();
            let spec = env.spec();
            assert!(spec.max_episode_steps >= 1);
            assert_eq!(spec.action_low.len(), spec.action_dim);
            assert!(spec
                .action_low
                .iter()
                .zip(&spec.action_high)
                .all(|(lo, hi)| lo < hi));
        }
    }

    #[test]
    fn done_exactly_at_step_limit() {
        for id in all_ids() {
            let mut env = id.build();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            env.reset(&mut rng);
            let limit = env.spec().max_episode_steps;
            let zero = vec![0.0; env.spec().action_dim];
            for t in 1..=limit {
                let r = env.step(&zero).unwrap();
                assert_eq!(r.done, t == limit, "{id} step {t}");
                assert_eq!(r.timeout, r.done);
            }
        }
    }

    #[test]
    fn step_before_reset_fails() {
        let mut env = EnvId::Pendulum.build();
        assert!(matches!(env.step(&[0.0]), Err(Error::EnvNotReset)));
    }

    #[test]
    fn wrong_action_length_is_rejected() {
        for id in all_ids() {
            let mut env = id.build();
            env.reset(&mut ChaCha8Rng::seed_from_u64(0));
            let bad = vec![0.0; env.spec().action_dim + 1];
            assert!(matches!(
                env.step(&bad),
                Err(Error::DimensionMismatch { .. })
            ));
        }
    }

    #[test]
    fn identical_seeds_and_actions_are_bit_identical() {
        for id in all_ids() {
            let run = || {
                let mut env = id.build();
                let mut rng = ChaCha8Rng::seed_from_u64(11);
                let mut trace = vec![env.reset(&mut rng)];
                let k = env.spec().action_dim;
                for t in 0..300 {
                    let a: Vec<f64> = (0..k).map(|j| ((t * 7 + j) as f64).sin() * 3.0).collect();
                    let r = env.step(&a).unwrap();
                    trace.push(r.next_state.clone());
                    trace.push(vec![r.reward]);
                    if r.done {
                        trace.push(env.reset(&mut rng));
                    }
                }
                trace
            };
            let (a, b) = (run(), run());
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                let xb: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
                let yb: Vec<u64> = y.iter().map(|v| v.to_bits()).collect();
                assert_eq!(xb, yb);
            }
        }
    }

    #[test]
    fn extreme_bounded_actions_stay_finite() {
        // 10x the episode limit without resetting, saturating actions.
        for id in all_ids() {
            let mut env = id.build();
            env.reset(&mut ChaCha8Rng::seed_from_u64(5));
            let k = env.spec().action_dim;
            let steps = 10 * env.spec().max_episode_steps;
            for t in 0..steps {
                let sign = if (t / 37) % 2 == 0 { 1.0 } else { -1.0 };
                let r = env.step(&vec![sign * 1e6; k]).unwrap();
                assert!(r.reward.is_finite());
                assert!(r.next_state.iter().all(|x| x.is_finite()));
            }
        }
    }

    #[test]
    fn different_seeds_give_different_initial_states() {
        for id in [EnvId::PointMass, EnvId::Pendulum, EnvId::Synth(3)] {
            let mut differ = 0;
            for pair in 0..100u64 {
                let mut env = id.build();
                let s1 = env.reset(&mut ChaCha8Rng::seed_from_u64(2 * pair));
                let s2 = env.reset(&mut ChaCha8Rng::seed_from_u64(2 * pair + 1));
                if s1 != s2 {
                    differ += 1;
                }
            }
            assert!(differ >= 99, "{id}: only {differ} of 100 pairs differ");
        }
    }
}
