//! Reference implementation of the combined PPO objective in plain `f64`,
//! used as a finite-difference oracle for the hand-written gradients.
//!
//! A perturbation of one network parameter only changes a few activations,
//! so every sample's forward pass is cached and patched per component
//! instead of recomputed.

#![allow(dead_code)]

use std::f64::consts::PI;

/// A cached `in → h → h → out` tanh network evaluated on fixed inputs.
pub struct CachedMlp {
    widths: [usize; 4],
    params: Vec<f64>,
    offsets: [usize; 3],
    rows: usize,
    inputs: Vec<f64>,
    pre1: Vec<f64>,
    act1: Vec<f64>,
    pre2: Vec<f64>,
    act2: Vec<f64>,
    out: Vec<f64>,
}

/// Location of one flat parameter.
enum Param {
    Weight { layer: usize, i: usize, j: usize },
    Bias { layer: usize, j: usize },
}

impl CachedMlp {
    /// `params` follow the crate layout: per layer, `fan_in × fan_out`
    /// row-major weights then `fan_out` biases.
    pub fn new(widths: [usize; 4], params: Vec<f64>, inputs: &[f64]) -> Self {
        let mut offsets = [0; 3];
        let mut at = 0;
        for l in 0..3 {
            offsets[l] = at;
            at += (widths[l] + 1) * widths[l + 1];
        }
        assert_eq!(at, params.len(), "parameter count");
        let rows = inputs.len() / widths[0];
        let mut net = Self {
            widths,
            params,
            offsets,
            rows,
            inputs: inputs.to_vec(),
            pre1: Vec::new(),
            act1: Vec::new(),
            pre2: Vec::new(),
            act2: Vec::new(),
            out: Vec::new(),
        };
        net.forward_all();
        net
    }

    fn w(&self, layer: usize, i: usize, j: usize) -> f64 {
        self.params[self.offsets[layer] + i * self.widths[layer + 1] + j]
    }

    fn b(&self, layer: usize, j: usize) -> f64 {
        let (fan_in, fan_out) = (self.widths[layer], self.widths[layer + 1]);
        self.params[self.offsets[layer] + fan_in * fan_out + j]
    }

    fn dense(&self, layer: usize, x: &[f64]) -> Vec<f64> {
        (0..self.widths[layer + 1])
            .map(|j| {
                self.b(layer, j)
                    + x.iter()
                        .enumerate()
                        .map(|(i, xi)| xi * self.w(layer, i, j))
                        .sum::<f64>()
            })
            .collect()
    }

    fn forward_all(&mut self) {
        let [d0, _, _, _] = self.widths;
        let (mut pre1, mut act1, mut pre2, mut act2, mut out) =
            (vec![], vec![], vec![], vec![], vec![]);
        for r in 0..self.rows {
            let x = &self.inputs[r * d0..(r + 1) * d0];
            let a1 = self.dense(0, x);
            let z1: Vec<f64> = a1.iter().map(|v| v.tanh()).collect();
            let a2 = self.dense(1, &z1);
            let z2: Vec<f64> = a2.iter().map(|v| v.tanh()).collect();
            let o = self.dense(2, &z2);
            pre1.extend(a1);
            act1.extend(z1);
            pre2.extend(a2);
            act2.extend(z2);
            out.extend(o);
        }
        (self.pre1, self.act1, self.pre2, self.act2, self.out) = (pre1, act1, pre2, act2, out);
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn outputs(&self) -> &[f64] {
        &self.out
    }

    fn locate(&self, p: usize) -> Param {
        let layer = (0..3).rev().find(|&l| self.offsets[l] <= p).unwrap();
        let local = p - self.offsets[layer];
        let (fan_in, fan_out) = (self.widths[layer], self.widths[layer + 1]);
        if local < fan_in * fan_out {
            Param::Weight {
                layer,
                i: local / fan_out,
                j: local % fan_out,
            }
        } else {
            Param::Bias {
                layer,
                j: local - fan_in * fan_out,
            }
        }
    }

    /// Outputs of every row with parameter `p` shifted by `delta`.
    pub fn perturbed_outputs(&self, p: usize, delta: f64) -> Vec<f64> {
        let [d0, h1, h2, d3] = self.widths;
        let mut out = self.out.clone();
        let param = self.locate(p);
        for r in 0..self.rows {
            let o = &mut out[r * d3..(r + 1) * d3];
            match param {
                Param::Weight { layer: 2, i, j } => o[j] += delta * self.act2[r * h2 + i],
                Param::Bias { layer: 2, j } => o[j] += delta,
                Param::Weight { layer: 1, .. } | Param::Bias { layer: 1, .. } => {
                    let (shift, k) = match param {
                        Param::Weight { i, j, .. } => (delta * self.act1[r * h1 + i], j),
                        Param::Bias { j, .. } => (delta, j),
                    };
                    let dz = (self.pre2[r * h2 + k] + shift).tanh() - self.act2[r * h2 + k];
                    for (c, oc) in o.iter_mut().enumerate() {
                        *oc += self.w(2, k, c) * dz;
                    }
                }
                _ => {
                    let (shift, j) = match param {
                        Param::Weight { i, j, .. } => (delta * self.inputs[r * d0 + i], j),
                        Param::Bias { j, .. } => (delta, j),
                    };
                    let dz1 = (self.pre1[r * h1 + j] + shift).tanh() - self.act1[r * h1 + j];
                    if dz1 == 0.0 {
                        continue;
                    }
                    let mut new_act2 = vec![0.0; h2];
                    for k in 0..h2 {
                        let a2 = self.pre2[r * h2 + k] + self.w(1, j, k) * dz1;
                        new_act2[k] = a2.tanh();
                    }
                    for c in 0..d3 {
                        let mut v = self.b(2, c);
                        for k in 0..h2 {
                            v += new_act2[k] * self.w(2, k, c);
                        }
                        o[c] = v;
                    }
                }
            }
        }
        out
    }
}

/// Data of one mini-batch in plain `f64`.
pub struct RefBatch {
    pub state_dim: usize,
    pub action_dim: usize,
    pub states: Vec<f64>,
    pub actions: Vec<f64>,
    pub advantages: Vec<f64>,
    pub targets: Vec<f64>,
    pub old_means: Vec<f64>,
    pub old_stds: Vec<f64>,
}

impl RefBatch {
    pub fn len(&self) -> usize {
        self.advantages.len()
    }
}

pub fn gaussian_log_density(mean: &[f64], std: &[f64], action: &[f64]) -> f64 {
    mean.iter()
        .zip(std)
        .zip(action)
        .map(|((m, s), a)| {
            let z = (a - m) / s;
            -0.5 * z * z - s.ln() - 0.5 * (2.0 * PI).ln()
        })
        .sum()
}

pub fn standardize(xs: &[f64]) -> Vec<f64> {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let scale = var.sqrt() + 1e-8;
    xs.iter().map(|x| (x - mean) / scale).collect()
}

/// Which side of the clip band a ratio falls on: -1 below, 0 inside, 1 above.
pub fn band(ratio: f64, eps: f64) -> i8 {
    if ratio < 1.0 - eps {
        -1
    } else if ratio > 1.0 + eps {
        1
    } else {
        0
    }
}

/// `L_clip - c_v·L_V` from network outputs, plus each sample's ratio.
pub fn reference_objective(
    batch: &RefBatch,
    new_means: &[f64],
    log_std: &[f64],
    values: &[f64],
    advantages: &[f64],
    eps: f64,
    value_coef: f64,
) -> (f64, Vec<f64>) {
    let k = batch.action_dim;
    let std: Vec<f64> = log_std.iter().map(|l| l.exp()).collect();
    let m = batch.len();
    let mut ratios = Vec::with_capacity(m);
    let mut surrogate = 0.0;
    let mut value_loss = 0.0;
    for s in 0..m {
        let row = s * k..(s + 1) * k;
        let action = &batch.actions[row.clone()];
        let new = gaussian_log_density(&new_means[row.clone()], &std, action);
        let old = gaussian_log_density(&batch.old_means[row.clone()], &batch.old_stds[row], action);
        let r = (new - old).exp();
        let a = advantages[s];
        surrogate += (r * a).min(r.clamp(1.0 - eps, 1.0 + eps) * a);
        value_loss += (values[s] - batch.targets[s]).powi(2);
        ratios.push(r);
    }
    (
        surrogate / m as f64 - value_coef * value_loss / m as f64,
        ratios,
    )
}
