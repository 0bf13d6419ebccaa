//! Two-hidden-layer tanh perceptron with hand-written reverse mode and Adam.

mod adam;
pub mod checkpoint;
mod init;
pub(crate) mod kernels;

use rand::Rng;

use crate::error::{check_dim, Result};
use crate::scalar::Scalar;

pub use adam::{AdamState, BETA1, BETA2, EPSILON as ADAM_EPSILON};

pub const HIDDEN: usize = 64;

/// Parameters of an `input → h → h → output` network with tanh hidden units
/// and a linear output.
///
/// Stored flat. Layer `l` occupies `fan_in·fan_out` weights (row-major,
/// `fan_in × fan_out`) followed by `fan_out` biases; layers are laid out in
/// order. Gradient vectors share this layout.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams<S> {
    widths: [usize; 4],
    data: Vec<S>,
}

/// Activations of a batched forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Tape<S> {
    rows: usize,
    input: Vec<S>,
    hidden1: Vec<S>,
    hidden2: Vec<S>,
    output: Vec<S>,
}

impl<S> Tape<S> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Row-major `rows × output_dim`.
    pub fn output(&self) -> &[S] {
        &self.output
    }
}

pub fn param_count(input: usize, hidden: usize, output: usize) -> usize {
    (input + 1) * hidden + (hidden + 1) * hidden + (hidden + 1) * output
}

impl<S: Scalar> MlpParams<S> {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self::zeros_with_hidden(input, HIDDEN, output)
    }

    pub fn zeros_with_hidden(input: usize, hidden: usize, output: usize) -> Self {
        assert!(input > 0 && hidden > 0 && output > 0, "empty layer");
        Self {
            widths: [input, hidden, hidden, output],
            data: vec![S::zero(); param_count(input, hidden, output)],
        }
    }

    /// Orthogonal weights (hidden gain √2, output gain `output_gain`), zero biases.
    pub fn orthogonal<R: Rng + ?Sized>(
        input: usize,
        output: usize,
        output_gain: f64,
        rng: &mut R,
    ) -> Self {
        let mut params = Self::zeros(input, output);
        let gains = [2.0_f64.sqrt(), 2.0_f64.sqrt(), output_gain];
        for (layer, gain) in gains.into_iter().enumerate() {
            let (fan_in, fan_out) = params.layer_shape(layer);
            let w = init::orthogonal(fan_in, fan_out, gain, rng);
            let (weights, _) = params.layer_mut(layer);
            for (dst, src) in weights.iter_mut().zip(w) {
                *dst = S::of(src);
            }
        }
        params
    }

    pub fn from_flat(input: usize, hidden: usize, output: usize, data: Vec<S>) -> Result<Self> {
        check_dim(
            "mlp parameter vector",
            param_count(input, hidden, output),
            data.len(),
        )?;
        Ok(Self {
            widths: [input, hidden, hidden, output],
            data,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn hidden_dim(&self) -> usize {
        self.widths[1]
    }

    pub fn output_dim(&self) -> usize {
        self.widths[3]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn layer_shape(&self, layer: usize) -> (usize, usize) {
        (self.widths[layer], self.widths[layer + 1])
    }

    fn layer_offset(&self, layer: usize) -> usize {
        (0..layer)
            .map(|l| {
                let (i, o) = self.layer_shape(l);
                (i + 1) * o
            })
            .sum()
    }

    fn split_layer<'a>(&self, layer: usize, flat: &'a [S]) -> (&'a [S], &'a [S]) {
        let (fan_in, fan_out) = self.layer_shape(layer);
        let start = self.layer_offset(layer);
        let (w, rest) = flat[start..].split_at(fan_in * fan_out);
        (w, &rest[..fan_out])
    }

    fn split_layer_mut<'a>(&self, layer: usize, flat: &'a mut [S]) -> (&'a mut [S], &'a mut [S]) {
        let (fan_in, fan_out) = self.layer_shape(layer);
        let start = self.layer_offset(layer);
        let (w, rest) = flat[start..].split_at_mut(fan_in * fan_out);
        (w, &mut rest[..fan_out])
    }

    /// `(weights, biases)` of a layer; weights are `fan_in × fan_out`.
    pub fn layer(&self, layer: usize) -> (&[S], &[S]) {
        self.split_layer(layer, &self.data)
    }

    pub fn layer_mut(&mut self, layer: usize) -> (&mut [S], &mut [S]) {
        let shape = Self {
            widths: self.widths,
            data: Vec::new(),
        };
        shape.split_layer_mut(layer, &mut self.data)
    }

    pub fn forward(&self, input: &[S]) -> Result<Vec<S>> {
        Ok(self.forward_batch(input, 1)?.output)
    }

    /// Forward pass over `rows` inputs stored row-major in `inputs`.
    pub fn forward_batch(&self, inputs: &[S], rows: usize) -> Result<Tape<S>> {
        let [d_in, h1, h2, d_out] = self.widths;
        check_dim("mlp input", rows * d_in, inputs.len())?;
        let mut tape = Tape {
            rows,
            input: inputs.to_vec(),
            hidden1: vec![S::zero(); rows * h1],
            hidden2: vec![S::zero(); rows * h2],
            output: vec![S::zero(); rows * d_out],
        };
        let (w0, b0) = self.layer(0);
        let (w1, b1) = self.layer(1);
        let (w2, b2) = self.layer(2);
        for r in 0..rows {
            let x = &inputs[r * d_in..(r + 1) * d_in];
            let a1 = &mut tape.hidden1[r * h1..(r + 1) * h1];
            kernels::affine(x, w0, b0, a1);
            a1.iter_mut().for_each(|v| *v = v.tanh());
            let a2 = &mut tape.hidden2[r * h2..(r + 1) * h2];
            kernels::affine(&tape.hidden1[r * h1..(r + 1) * h1], w1, b1, a2);
            a2.iter_mut().for_each(|v| *v = v.tanh());
            kernels::affine(
                &tape.hidden2[r * h2..(r + 1) * h2],
                w2,
                b2,
                &mut tape.output[r * d_out..(r + 1) * d_out],
            );
        }
        Ok(tape)
    }

    /// Gradients of `⟨output, output_grad⟩` for a single input:
    /// `(parameter gradient, input gradient)`.
    pub fn backward(&self, input: &[S], output_grad: &[S]) -> Result<(Vec<S>, Vec<S>)> {
        let tape = self.forward_batch(input, 1)?;
        let mut grads = vec![S::zero(); self.len()];
        let input_grad = self.backward_batch(&tape, output_grad, &mut grads, true)?;
        Ok((grads, input_grad.unwrap_or_default()))
    }

    /// Accumulates the parameter gradient of `Σ_rows ⟨output_r, output_grad_r⟩`
    /// into `param_grads`. Returns the per-row input gradient when asked.
    pub fn backward_batch(
        &self,
        tape: &Tape<S>,
        output_grads: &[S],
        param_grads: &mut [S],
        want_input_grad: bool,
    ) -> Result<Option<Vec<S>>> {
        let [d_in, h1, h2, d_out] = self.widths;
        let rows = tape.rows;
        check_dim("mlp output gradient", rows * d_out, output_grads.len())?;
        check_dim("mlp parameter gradient", self.len(), param_grads.len())?;

        let (w1, _) = self.layer(1);
        let (w2, _) = self.layer(2);
        let mut input_grads = want_input_grad.then(|| vec![S::zero(); rows * d_in]);
        let mut g2 = vec![S::zero(); h2];
        let mut g1 = vec![S::zero(); h1];

        for r in 0..rows {
            let x = &tape.input[r * d_in..(r + 1) * d_in];
            let a1 = &tape.hidden1[r * h1..(r + 1) * h1];
            let a2 = &tape.hidden2[r * h2..(r + 1) * h2];
            let gout = &output_grads[r * d_out..(r + 1) * d_out];

            {
                let (gw, gb) = self.split_layer_mut(2, param_grads);
                kernels::affine_param_grad(a2, gout, gw, gb);
            }
            kernels::affine_input_grad(w2, gout, &mut g2);
            for (g, &a) in g2.iter_mut().zip(a2) {
                *g = *g * (S::one() - a * a);
            }

            {
                let (gw, gb) = self.split_layer_mut(1, param_grads);
                kernels::affine_param_grad(a1, &g2, gw, gb);
            }
            kernels::affine_input_grad(w1, &g2, &mut g1);
            for (g, &a) in g1.iter_mut().zip(a1) {
                *g = *g * (S::one() - a * a);
            }

            {
                let (gw, gb) = self.split_layer_mut(0, param_grads);
                kernels::affine_param_grad(x, &g1, gw, gb);
            }
            if let Some(ig) = input_grads.as_mut() {
                let (w0, _) = self.layer(0);
                kernels::affine_input_grad(w0, &g1, &mut ig[r * d_in..(r + 1) * d_in]);
            }
        }
        Ok(input_grads)
    }
}
