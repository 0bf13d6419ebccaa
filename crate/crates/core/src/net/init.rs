use rand::Rng;
use rand_distr::StandardNormal;

/// Orthogonal `rows × cols` matrix (row-major) scaled by `gain`.
///
/// Rows are orthonormal when `rows <= cols`, columns otherwise. Built by
/// modified Gram-Schmidt on a standard-normal draw.
pub(crate) fn orthogonal<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    gain: f64,
    rng: &mut R,
) -> Vec<f64> {
    // Orthonormalize `short` vectors of length `long`.
    let (short, long) = if rows <= cols {
        (rows, cols)
    } else {
        (cols, rows)
    };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(short);
    while basis.len() < short {
        let mut v: Vec<f64> = (0..long).map(|_| rng.sample(StandardNormal)).collect();
        for q in &basis {
            let proj: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= proj * qi;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        // A draw in the span of the existing basis is discarded and redrawn.
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }

    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let x = if rows <= cols {
                basis[r][c]
            } else {
                basis[c][r]
            };
            out[r * cols + c] = gain * x;
        }
    }
    out
}
