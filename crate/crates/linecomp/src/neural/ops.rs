//! Differentiable primitives shared by both architectures.
//!
//! Every `*_bwd` takes the upstream gradient and returns gradients in the
//! same order as the forward inputs. Reductions follow the forward
//! definition exactly; each op is validated against central finite
//! differences in the unit tests below.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;

use crate::Scalar;

/// `y = x w + b`, rows are examples.
pub fn linear<S: Scalar>(x: &Array2<S>, w: &Array2<S>, b: &Array1<S>) -> Array2<S> {
    x.dot(w) + b
}

pub fn linear_bwd<S: Scalar>(
    x: &Array2<S>,
    w: &Array2<S>,
    dy: &Array2<S>,
) -> (Array2<S>, Array2<S>, Array1<S>) {
    let dx = dy.dot(&w.t());
    let dw = x.t().dot(dy);
    let db = dy.sum_axis(Axis(0));
    (dx, dw, db)
}

pub struct LayerNormCache<S> {
    xhat: Array2<S>,
    inv_std: Array1<S>,
}

const LN_EPS: f64 = 1e-5;

/// Row-wise layer normalization with learned gain and bias.
pub fn layer_norm<S: Scalar>(
    x: &Array2<S>,
    gain: &Array1<S>,
    bias: &Array1<S>,
) -> (Array2<S>, LayerNormCache<S>) {
    let d = S::from_f64(x.ncols() as f64);
    let mean = x.sum_axis(Axis(1)) / d;
    let mut xhat = x.clone();
    for (mut row, m) in xhat.rows_mut().into_iter().zip(mean.iter()) {
        row.mapv_inplace(|v| v - *m);
    }
    let var = xhat.mapv(|v| v * v).sum_axis(Axis(1)) / d;
    let inv_std = var.mapv(|v| S::one() / (v + S::from_f64(LN_EPS)).sqrt());
    for (mut row, s) in xhat.rows_mut().into_iter().zip(inv_std.iter()) {
        row.mapv_inplace(|v| v * *s);
    }
    let mut y = xhat.clone();
    for mut row in y.rows_mut() {
        row.zip_mut_with(gain, |v, g| *v = *v * *g);
        row.zip_mut_with(bias, |v, b| *v = *v + *b);
    }
    (y, LayerNormCache { xhat, inv_std })
}

pub fn layer_norm_bwd<S: Scalar>(
    cache: &LayerNormCache<S>,
    gain: &Array1<S>,
    dy: &Array2<S>,
) -> (Array2<S>, Array1<S>, Array1<S>) {
    let d = S::from_f64(dy.ncols() as f64);
    let dbias = dy.sum_axis(Axis(0));
    let dgain = (dy * &cache.xhat).sum_axis(Axis(0));
    // dxhat = dy * gain; dx = inv_std * (dxhat - mean(dxhat) - xhat * mean(dxhat*xhat))
    let mut dxhat = dy.clone();
    for mut row in dxhat.rows_mut() {
        row.zip_mut_with(gain, |v, g| *v = *v * *g);
    }
    let m1 = dxhat.sum_axis(Axis(1)) / d;
    let m2 = (&dxhat * &cache.xhat).sum_axis(Axis(1)) / d;
    let mut dx = dxhat;
    for (i, mut row) in dx.rows_mut().into_iter().enumerate() {
        let (a, b, s) = (m1[i], m2[i], cache.inv_std[i]);
        let xr = cache.xhat.row(i);
        for (v, xh) in row.iter_mut().zip(xr.iter()) {
            *v = s * (*v - a - *xh * b);
        }
    }
    (dx, dgain, dbias)
}

/// GELU, tanh approximation.
pub fn gelu<S: Scalar>(x: &Array2<S>) -> Array2<S> {
    x.mapv(gelu_scalar)
}

fn gelu_scalar<S: Scalar>(x: S) -> S {
    let c = S::from_f64((2.0 / std::f64::consts::PI).sqrt());
    let a = S::from_f64(0.044715);
    let half = S::from_f64(0.5);
    let u = c * (x + a * x * x * x);
    half * x * (S::one() + u.tanh())
}

pub fn gelu_bwd<S: Scalar>(x: &Array2<S>, dy: &Array2<S>) -> Array2<S> {
    let mut dx = x.clone();
    dx.zip_mut_with(dy, |v, d| {
        let c = S::from_f64((2.0 / std::f64::consts::PI).sqrt());
        let a = S::from_f64(0.044715);
        let half = S::from_f64(0.5);
        let x = *v;
        let u = c * (x + a * x * x * x);
        let t = u.tanh();
        let du = c * (S::one() + S::from_f64(3.0) * a * x * x);
        let grad = half * (S::one() + t) + half * x * (S::one() - t * t) * du;
        *v = grad * *d;
    });
    dx
}

/// Row-wise softmax; rows whose entries are all very negative (fully
/// masked) come out uniform, which is harmless because such rows are
/// never read.
pub fn softmax_rows<S: Scalar>(x: &Array2<S>) -> Array2<S> {
    let mut a = x.clone();
    for mut row in a.rows_mut() {
        let max = row.iter().cloned().fold(S::neg_infinity(), S::max);
        let max = if max.is_finite() { max } else { S::zero() };
        row.mapv_inplace(|v| (v - max).exp());
        let sum: S = row.iter().cloned().sum();
        if sum > S::zero() {
            row.mapv_inplace(|v| v / sum);
        } else {
            let u = S::one() / S::from_f64(row.len() as f64);
            row.fill(u);
        }
    }
    a
}

/// Given the softmax output `a` and upstream `da`, returns the gradient
/// with respect to the pre-softmax scores.
pub fn softmax_rows_bwd<S: Scalar>(a: &Array2<S>, da: &Array2<S>) -> Array2<S> {
    let inner = (a * da).sum_axis(Axis(1));
    let mut ds = da.clone();
    for (i, mut row) in ds.rows_mut().into_iter().enumerate() {
        let c = inner[i];
        let ar = a.row(i);
        for (v, av) in row.iter_mut().zip(ar.iter()) {
            *v = *av * (*v - c);
        }
    }
    ds
}

/// Numerically stable log-softmax over one score vector.
pub fn log_softmax<S: Scalar>(x: &Array1<S>) -> Array1<S> {
    let max = x.iter().cloned().fold(S::neg_infinity(), S::max);
    let max = if max.is_finite() { max } else { S::zero() };
    let lse: S = x.iter().map(|v| (*v - max).exp()).sum();
    let lse = max + lse.ln();
    x.mapv(|v| v - lse)
}

/// Row-wise log-softmax.
pub fn log_softmax_rows<S: Scalar>(x: &Array2<S>) -> Array2<S> {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(S::neg_infinity(), S::max);
        let max = if max.is_finite() { max } else { S::zero() };
        let lse: S = row.iter().map(|v| (*v - max).exp()).sum();
        let lse = max + lse.ln();
        row.mapv_inplace(|v| v - lse);
    }
    out
}

/// Inverted-dropout mask: entries are `1/keep` with probability `keep`,
/// else 0. A keep probability of 1 short-circuits to all ones.
pub fn dropout_mask<S: Scalar, R: Rng>(
    shape: (usize, usize),
    keep: f64,
    rng: &mut R,
) -> Array2<S> {
    let mut mask = Array2::from_elem(shape, S::one());
    if keep >= 1.0 {
        return mask;
    }
    let scale = S::from_f64(1.0 / keep);
    for v in mask.iter_mut() {
        *v = if rng.random::<f64>() < keep {
            scale
        } else {
            S::zero()
        };
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn randn(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        Array::from_shape_fn((rows, cols), |_| StandardNormal.sample(rng))
    }

    /// Central finite difference of a scalar-valued function of one array.
    fn fd_grad(
        x: &Array2<f64>,
        f: &mut dyn FnMut(&Array2<f64>) -> f64,
    ) -> Array2<f64> {
        let eps = 1e-5;
        let mut g = Array2::zeros(x.raw_dim());
        for idx in 0..x.len() {
            let mut plus = x.clone();
            plus.as_slice_mut().unwrap()[idx] += eps;
            let mut minus = x.clone();
            minus.as_slice_mut().unwrap()[idx] -= eps;
            g.as_slice_mut().unwrap()[idx] = (f(&plus) - f(&minus)) / (2.0 * eps);
        }
        g
    }

    fn assert_close(a: &Array2<f64>, b: &Array2<f64>, tol: f64) {
        for (x, y) in a.iter().zip(b.iter()) {
            let rel = (x - y).abs() / (x.abs() + y.abs()).max(1e-8);
            assert!(rel <= tol, "{x} vs {y} (rel {rel})");
        }
    }

    /// Weighted sum makes a scalar objective out of an array output.
    fn weighted(y: &Array2<f64>, w: &Array2<f64>) -> f64 {
        (y * w).sum()
    }

    #[test]
    fn linear_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (x, w, b) = (
            randn(3, 4, &mut rng),
            randn(4, 5, &mut rng),
            randn(1, 5, &mut rng),
        );
        let b1 = b.row(0).to_owned();
        let weights = randn(3, 5, &mut rng);
        let (dx, dw, db) = linear_bwd(&x, &w, &weights);
        assert_close(
            &dx,
            &fd_grad(&x, &mut |x| weighted(&linear(x, &w, &b1), &weights)),
            1e-6,
        );
        assert_close(
            &dw,
            &fd_grad(&w, &mut |w| weighted(&linear(&x, w, &b1), &weights)),
            1e-6,
        );
        let db_fd = fd_grad(&b, &mut |b| {
            weighted(&linear(&x, &w, &b.row(0).to_owned()), &weights)
        });
        assert_close(&db.insert_axis(Axis(0)), &db_fd, 1e-6);
    }

    #[test]
    fn layer_norm_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = randn(4, 6, &mut rng);
        let gain = randn(1, 6, &mut rng).row(0).to_owned();
        let bias = randn(1, 6, &mut rng).row(0).to_owned();
        let weights = randn(4, 6, &mut rng);
        let (_, cache) = layer_norm(&x, &gain, &bias);
        let (dx, dgain, dbias) = layer_norm_bwd(&cache, &gain, &weights);
        assert_close(
            &dx,
            &fd_grad(&x, &mut |x| weighted(&layer_norm(x, &gain, &bias).0, &weights)),
            1e-5,
        );
        let dg_fd = fd_grad(&gain.clone().insert_axis(Axis(0)), &mut |g| {
            weighted(&layer_norm(&x, &g.row(0).to_owned(), &bias).0, &weights)
        });
        assert_close(&dgain.insert_axis(Axis(0)), &dg_fd, 1e-5);
        let db_fd = fd_grad(&bias.clone().insert_axis(Axis(0)), &mut |b| {
            weighted(&layer_norm(&x, &gain, &b.row(0).to_owned()).0, &weights)
        });
        assert_close(&dbias.insert_axis(Axis(0)), &db_fd, 1e-5);
    }

    #[test]
    fn gelu_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = randn(3, 5, &mut rng);
        let weights = randn(3, 5, &mut rng);
        let dx = gelu_bwd(&x, &weights);
        assert_close(&dx, &fd_grad(&x, &mut |x| weighted(&gelu(x), &weights)), 1e-6);
    }

    #[test]
    fn softmax_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = randn(3, 7, &mut rng);
        let weights = randn(3, 7, &mut rng);
        let a = softmax_rows(&x);
        let ds = softmax_rows_bwd(&a, &weights);
        assert_close(
            &ds,
            &fd_grad(&x, &mut |x| weighted(&softmax_rows(x), &weights)),
            1e-5,
        );
    }

    #[test]
    fn softmax_handles_masked_rows() {
        let x = ndarray::array![[f64::NEG_INFINITY, f64::NEG_INFINITY]];
        let a = softmax_rows(&x);
        assert_eq!(a, ndarray::array![[0.5, 0.5]]);
    }

    #[test]
    fn log_softmax_normalizes() {
        let x = ndarray::array![1.0_f64, 2.0, 3.0];
        let lp = log_softmax(&x);
        let total: f64 = lp.iter().map(|v| v.exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(lp.iter().all(|v| *v < 0.0));
    }

    #[test]
    fn dropout_keeps_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mask: Array2<f64> = dropout_mask((200, 200), 0.9, &mut rng);
        let mean = mask.sum() / (200.0 * 200.0);
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
        let ones: Array2<f64> = dropout_mask((4, 4), 1.0, &mut rng);
        assert!(ones.iter().all(|v| *v == 1.0));
    }
}
