use std::f64::consts::PI;

use rand::{Rng, RngCore};

use super::{EnvSpec, Environment, EpisodeClock, StepResult};
use crate::error::Result;

const MAX_SPEED: f64 = 8.0;
const MAX_TORQUE: f64 = 2.0;
const DT: f64 = 0.05;
const GRAVITY: f64 = 10.0;
const MASS: f64 = 1.0;
const LENGTH: f64 = 1.0;
const VELOCITY_COST: f64 = 0.1;
const TORQUE_COST: f64 = 0.001;
const EPISODE_STEPS: usize = 200;

/// Torque-limited pendulum swing-up.
///
/// Angle 0 is upright. Observation is `(cos θ, sin θ, θ̇)`, the action is a
/// single torque in `[-2, 2]`, and the per-step reward is
/// `-(θ² + 0.1·θ̇² + 0.001·u²)` with θ wrapped to `[-π, π)`, evaluated at the
/// pre-step state. Initial angle is uniform in `[-π, π]`, initial angular
/// velocity uniform in `[-1, 1]`. Episodes last 200 steps.
#[derive(Debug, Clone)]
pub struct Pendulum {
    spec: EnvSpec,
    theta: f64,
    theta_dot: f64,
    clock: EpisodeClock,
}

impl Pendulum {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                state_dim: 3,
                action_dim: 1,
                action_low: vec![-MAX_TORQUE],
                action_high: vec![MAX_TORQUE],
                max_episode_steps: EPISODE_STEPS,
            },
            theta: 0.0,
            theta_dot: 0.0,
            clock: EpisodeClock::default(),
        }
    }

    /// Places the pendulum at an exact state and restarts the episode clock.
    pub fn set_state(&mut self, theta: f64, theta_dot: f64) -> Vec<f64> {
        self.theta = theta;
        self.theta_dot = theta_dot;
        self.clock.start();
        self.observe()
    }

    fn observe(&self) -> Vec<f64> {
        vec![self.theta.cos(), self.theta.sin(), self.theta_dot]
    }
}

impl Default for Pendulum {
    fn default() -> Self {
        Self::new()
    }
}

fn wrap_angle(theta: f64) -> f64 {
    (theta + PI).rem_euclid(2.0 * PI) - PI
}

impl Environment for Pendulum {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64> {
        let theta = rng.random_range(-PI..=PI);
        let theta_dot = rng.random_range(-1.0..=1.0);
        self.set_state(theta, theta_dot)
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        let u = self.spec.clamp_action(action)?[0];
        let done = self.clock.tick(self.spec.max_episode_steps)?;

        let angle = wrap_angle(self.theta);
        let cost =
            angle * angle + VELOCITY_COST * self.theta_dot * self.theta_dot + TORQUE_COST * u * u;

        // Angle measured from upright, so gravity pushes away from 0.
        let accel =
            3.0 * GRAVITY / (2.0 * LENGTH) * self.theta.sin() + 3.0 / (MASS * LENGTH * LENGTH) * u;
        self.theta_dot = (self.theta_dot + accel * DT).clamp(-MAX_SPEED, MAX_SPEED);
        self.theta = wrap_angle(self.theta + self.theta_dot * DT);

        Ok(StepResult {
            next_state: self.observe(),
            reward: -cost,
            done,
            timeout: done,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn upright_rest_with_zero_torque_has_zero_reward() {
        let mut env = Pendulum::new();
        env.set_state(0.0, 0.0);
        let r = env.step(&[0.0]).unwrap();
        assert_eq!(r.reward, 0.0);
        assert_eq!(r.next_state, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn reward_matches_quadratic_cost() {
        let mut env = Pendulum::new();
        env.set_state(0.5, -2.0);
        let r = env.step(&[1.5]).unwrap();
        let expected = -(0.25 + 0.1 * 4.0 + 0.001 * 2.25);
        assert!((r.reward - expected).abs() < 1e-15);
    }

    #[test]
    fn reset_is_deterministic_and_in_range() {
        let a = Pendulum::new().reset(&mut ChaCha8Rng::seed_from_u64(9));
        let b = Pendulum::new().reset(&mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        assert!((a[0] * a[0] + a[1] * a[1] - 1.0).abs() < 1e-12);
        assert!(a[2].abs() <= 1.0);
    }

    #[test]
    fn torque_is_clamped() {
        let mut a = Pendulum::new();
        let mut b = Pendulum::new();
        a.set_state(1.0, 0.3);
        b.set_state(1.0, 0.3);
        assert_eq!(a.step(&[50.0]).unwrap(), b.step(&[MAX_TORQUE]).unwrap());
    }

    #[test]
    fn wrap_angle_range() {
        for x in [-10.0, -PI, -1.0, 0.0, 3.0, PI, 7.5] {
            let w = wrap_angle(x);
            assert!((-PI..PI).contains(&w), "{x} -> {w}");
            assert!(((x - w) / (2.0 * PI)).fract().abs() < 1e-12);
        }
    }
}
