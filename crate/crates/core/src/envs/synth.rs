use rand::{Rng, RngCore};

use super::{EnvSpec, Environment, EpisodeClock, StepResult, MAX_SYNTH_DIM};
use crate::error::Result;

const DT: f64 = 0.1;
const DAMPING: f64 = 0.1;
const CONTROL_COST: f64 = 0.01;
const EPISODE_STEPS: usize = 100;

/// `K` independent damped double integrators sharing one reward.
///
/// State is `(p_0, v_0, p_1, v_1, ...)`, action `K` forces in `[-1, 1]`.
/// Each dimension follows `v' = v + dt·(u - 0.1·v)`, `p' = p + dt·v'` and
/// contributes `-(p'² + 0.01·u²)` to the reward, so members of the family
/// differ only in action dimension. Positions start uniform in `[-1, 1]`,
/// velocities at 0. Episodes last 100 steps.
#[derive(Debug, Clone)]
pub struct SynthK {
    spec: EnvSpec,
    state: Vec<f64>,
    clock: EpisodeClock,
}

impl SynthK {
    /// # Panics
    /// If `k` is outside `1..=32`.
    pub fn new(k: usize) -> Self {
        assert!(
            (1..=MAX_SYNTH_DIM).contains(&k),
            "synth-K dimension {k} out of range"
        );
        Self {
            spec: EnvSpec {
                state_dim: 2 * k,
                action_dim: k,
                action_low: vec![-1.0; k],
                action_high: vec![1.0; k],
                max_episode_steps: EPISODE_STEPS,
            },
            state: vec![0.0; 2 * k],
            clock: EpisodeClock::default(),
        }
    }
}

impl Environment for SynthK {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64> {
        for pv in self.state.chunks_exact_mut(2) {
            pv[0] = rng.random_range(-1.0..=1.0);
            pv[1] = 0.0;
        }
        self.clock.start();
        self.state.clone()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        let u = self.spec.clamp_action(action)?;
        let done = self.clock.tick(self.spec.max_episode_steps)?;

        let mut reward = 0.0;
        for (pv, &uk) in self.state.chunks_exact_mut(2).zip(&u) {
            pv[1] += DT * (uk - DAMPING * pv[1]);
            pv[0] += DT * pv[1];
            reward -= pv[0] * pv[0] + CONTROL_COST * uk * uk;
        }

        Ok(StepResult {
            next_state: self.state.clone(),
            reward,
            done,
            timeout: done,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k1_state_dimension() {
        let env = SynthK::new(1);
        assert_eq!(env.spec().state_dim, 2);
        assert_eq!(env.spec().action_dim, 1);
    }

    #[test]
    fn dimensions_are_interchangeable() {
        // Each coordinate of synth-4 evolves exactly like synth-1 fed the
        // same per-coordinate initial state and action.
        let mut wide = SynthK::new(4);
        wide.clock.start();
        wide.state = vec![0.3, 0.0, -0.7, 0.2, 0.9, -0.1, 0.0, 0.5];
        let actions = [0.4, -1.0, 2.0, 0.1];

        let mut total = 0.0;
        let mut narrow_states = Vec::new();
        for k in 0..4 {
            let mut one = SynthK::new(1);
            one.clock.start();
            one.state = wide.state[2 * k..2 * k + 2].to_vec();
            let r = one.step(&[actions[k]]).unwrap();
            total += r.reward;
            narrow_states.extend(r.next_state);
        }
        let r = wide.step(&actions).unwrap();
        assert_eq!(r.next_state, narrow_states);
        assert!((r.reward - total).abs() < 1e-15);
    }

    #[test]
    #[should_panic]
    fn zero_dimension_panics() {
        SynthK::new(0);
    }
}
