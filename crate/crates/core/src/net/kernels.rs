//! Dense kernels with a fixed summation order.
//!
//! Every output element is accumulated in the same order whether a layer is
//! evaluated on one row or on a batch, so single-sample and batched passes
//! agree bit for bit.

use crate::scalar::Scalar;

const LANES: usize = 8;

/// `y += alpha * x`
#[inline]
pub(crate) fn axpy<S: Scalar>(alpha: S, x: &[S], y: &mut [S]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

#[inline]
pub(crate) fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [S::zero(); LANES];
    let split = a.len() - a.len() % LANES;
    for (ca, cb) in a[..split]
        .chunks_exact(LANES)
        .zip(b[..split].chunks_exact(LANES))
    {
        for k in 0..LANES {
            acc[k] = acc[k] + ca[k] * cb[k];
        }
    }
    let mut tail = S::zero();
    for (&x, &y) in a[split..].iter().zip(&b[split..]) {
        tail = tail + x * y;
    }
    let s01 = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    let s23 = (acc[4] + acc[5]) + (acc[6] + acc[7]);
    (s01 + s23) + tail
}

/// `out = bias + x · W` for one row; `weights` is `fan_in × fan_out`, row-major.
#[inline]
pub(crate) fn affine<S: Scalar>(x: &[S], weights: &[S], bias: &[S], out: &mut [S]) {
    let fan_out = bias.len();
    out.copy_from_slice(bias);
    for (&xi, row) in x.iter().zip(weights.chunks_exact(fan_out)) {
        axpy(xi, row, out);
    }
}

/// Accumulates one row's weight and bias gradients for `out = bias + x · W`.
#[inline]
pub(crate) fn affine_param_grad<S: Scalar>(
    x: &[S],
    out_grad: &[S],
    weight_grad: &mut [S],
    bias_grad: &mut [S],
) {
    let fan_out = out_grad.len();
    for (&xi, row) in x.iter().zip(weight_grad.chunks_exact_mut(fan_out)) {
        axpy(xi, out_grad, row);
    }
    axpy(S::one(), out_grad, bias_grad);
}

/// `x_grad = W · out_grad` for one row.
#[inline]
pub(crate) fn affine_input_grad<S: Scalar>(weights: &[S], out_grad: &[S], x_grad: &mut [S]) {
    let fan_out = out_grad.len();
    for (xg, row) in x_grad.iter_mut().zip(weights.chunks_exact(fan_out)) {
        *xg = dot(row, out_grad);
    }
}
