use rand::{Rng, RngCore};

use super::{EnvSpec, Environment, EpisodeClock, StepResult};
use crate::error::Result;

const DT: f64 = 0.1;
const DAMPING: f64 = 0.5;
const FORCE_LIMIT: f64 = 1.0;
const CONTROL_COST: f64 = 0.001;
const GOAL: [f64; 2] = [0.5, 0.5];
const EPISODE_STEPS: usize = 150;

/// Planar point mass pushed toward a fixed goal.
///
/// State is `(x, y, vx, vy)`, action a force in `[-1, 1]²`. Velocity follows
/// `v' = v + dt·(u - 0.5·v)`, position `p' = p + dt·v'` with `dt = 0.1`.
/// Reward is `-‖p' - g‖² - 0.001‖u‖²` with goal `g = (0.5, 0.5)`. Episodes
/// start at a uniform position in the unit square at rest and last 150 steps.
#[derive(Debug, Clone)]
pub struct PointMass {
    spec: EnvSpec,
    pos: [f64; 2],
    vel: [f64; 2],
    clock: EpisodeClock,
}

impl PointMass {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                state_dim: 4,
                action_dim: 2,
                action_low: vec![-FORCE_LIMIT; 2],
                action_high: vec![FORCE_LIMIT; 2],
                max_episode_steps: EPISODE_STEPS,
            },
            pos: [0.0; 2],
            vel: [0.0; 2],
            clock: EpisodeClock::default(),
        }
    }

    fn observe(&self) -> Vec<f64> {
        vec![self.pos[0], self.pos[1], self.vel[0], self.vel[1]]
    }
}

impl Default for PointMass {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for PointMass {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64> {
        self.pos = [rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0)];
        self.vel = [0.0; 2];
        self.clock.start();
        self.observe()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        let u = self.spec.clamp_action(action)?;
        let done = self.clock.tick(self.spec.max_episode_steps)?;

        let mut reward = 0.0;
        for d in 0..2 {
            self.vel[d] += DT * (u[d] - DAMPING * self.vel[d]);
            self.pos[d] += DT * self.vel[d];
            let off = self.pos[d] - GOAL[d];
            reward -= off * off + CONTROL_COST * u[d] * u[d];
        }

        Ok(StepResult {
            next_state: self.observe(),
            reward,
            done,
            timeout: done,
        })
    }
}
