use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-5;

/// Adam moments for one flat parameter vector.
///
/// `step` always descends: callers maximizing an objective pass its negated
/// gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<S> {
    first: Vec<S>,
    second: Vec<S>,
    steps: u64,
    beta1: S,
    beta2: S,
    epsilon: S,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(len: usize) -> Self {
        Self {
            first: vec![S::zero(); len],
            second: vec![S::zero(); len],
            steps: 0,
            beta1: S::of(BETA1),
            beta2: S::of(BETA2),
            epsilon: S::of(EPSILON),
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn moments(&self) -> (&[S], &[S]) {
        (&self.first, &self.second)
    }

    pub fn step(&mut self, params: &mut [S], grads: &[S], step_size: S) -> Result<()> {
        crate::error::check_dim("adam parameters", self.first.len(), params.len())?;
        crate::error::check_dim("adam gradients", self.first.len(), grads.len())?;
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                what: "gradient",
                detail: format!("component {i} is {}", grads[i]),
            });
        }

        self.steps += 1;
        let t = i32::try_from(self.steps).unwrap_or(i32::MAX);
        let one = S::one();
        let first_correction = one - self.beta1.powi(t);
        let second_correction = one - self.beta2.powi(t);

        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first.iter_mut())
            .zip(self.second.iter_mut())
        {
            *m = self.beta1 * *m + (one - self.beta1) * g;
            *v = self.beta2 * *v + (one - self.beta2) * g * g;
            let m_hat = *m / first_correction;
            let v_hat = *v / second_correction;
            *p = *p - step_size * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }
}
