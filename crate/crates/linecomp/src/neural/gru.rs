//! Recurrent baseline: a single-layer GRU over the same tied embedding.
//!
//! Gate math follows the fused-weights convention: with `c = x W + b` and
//! `u = h U` split into update/reset/candidate thirds,
//!
//! ```text
//! z = sigmoid(c_z + u_z)
//! r = sigmoid(c_r + u_r)
//! n = tanh(c_n + r * u_n)
//! h' = (1 - z) * n + z * h
//! ```
//!
//! The hidden state is wider than the embedding, so a learned bridge
//! projects it back down before the tied output product.

use ndarray::{s, Array2};
use rand::Rng;

use super::config::ModelConfig;
use super::ops::{dropout_mask, linear, linear_bwd};
use super::params::{ArchParams, GruParams, ModelParams};
use crate::Scalar;

struct StepCache<S> {
    h_prev: Array2<S>,
    z: Array2<S>,
    r: Array2<S>,
    n: Array2<S>,
    u_n: Array2<S>,
}

pub struct GruCache<S> {
    ids: Array2<usize>,
    emb_drop: Array2<S>,
    x: Array2<S>,
    steps: Vec<StepCache<S>>,
    out: Array2<S>,
    out_drop: Array2<S>,
    /// Bridge output `(B*T, d_embed)`, consumed by the tied projection.
    pub hidden: Array2<S>,
}

fn gru_params<S>(params: &ModelParams<S>) -> &GruParams<S> {
    match &params.arch {
        ArchParams::Gru(g) => g,
        ArchParams::Transformer { .. } => panic!("GRU pass over transformer parameters"),
    }
}

fn sigmoid<S: Scalar>(x: S) -> S {
    S::one() / (S::one() + (-x).exp())
}

pub fn forward<S: Scalar, R: Rng>(
    params: &ModelParams<S>,
    cfg: &ModelConfig,
    ids: &Array2<usize>,
    mut rng: Option<&mut R>,
) -> GruCache<S> {
    let g = gru_params(params);
    let (b, t) = ids.dim();
    assert!(t <= cfg.max_len, "sequence length {t} over budget");
    let h = cfg.gru_hidden;
    let n_rows = b * t;
    let keep = cfg.dropout_keep;

    let mut x = Array2::<S>::zeros((n_rows, cfg.d_embed));
    for bi in 0..b {
        for ti in 0..t {
            x.row_mut(bi * t + ti)
                .assign(&params.embedding.row(ids[(bi, ti)]));
        }
    }
    let emb_drop = match rng.as_deref_mut() {
        Some(r) => dropout_mask(x.dim(), keep, r),
        None => Array2::from_elem(x.dim(), S::one()),
    };
    x = x * &emb_drop;

    // One big input product for all steps; the recurrent product stays
    // per step.
    let c_all = linear(&x, &g.w_x, &g.b);
    let mut state = Array2::<S>::zeros((b, h));
    let mut steps = Vec::with_capacity(t);
    let mut out = Array2::<S>::zeros((n_rows, h));
    for ti in 0..t {
        let mut c_t = Array2::<S>::zeros((b, 3 * h));
        for bi in 0..b {
            c_t.row_mut(bi).assign(&c_all.row(bi * t + ti));
        }
        let u = state.dot(&g.u_h);
        let z = Array2::from_shape_fn((b, h), |(i, j)| sigmoid(c_t[(i, j)] + u[(i, j)]));
        let r =
            Array2::from_shape_fn((b, h), |(i, j)| sigmoid(c_t[(i, j + h)] + u[(i, j + h)]));
        let u_n = u.slice(s![.., 2 * h..3 * h]).to_owned();
        let n = Array2::from_shape_fn((b, h), |(i, j)| {
            (c_t[(i, j + 2 * h)] + r[(i, j)] * u_n[(i, j)]).tanh()
        });
        let h_prev = state;
        state = Array2::from_shape_fn((b, h), |(i, j)| {
            (S::one() - z[(i, j)]) * n[(i, j)] + z[(i, j)] * h_prev[(i, j)]
        });
        for bi in 0..b {
            out.row_mut(bi * t + ti).assign(&state.row(bi));
        }
        steps.push(StepCache { h_prev, z, r, n, u_n });
    }

    let out_drop = match rng.as_deref_mut() {
        Some(r) => dropout_mask(out.dim(), keep, r),
        None => Array2::from_elem(out.dim(), S::one()),
    };
    let out = out * &out_drop;
    let hidden = linear(&out, &g.bridge_w, &g.bridge_b);
    GruCache {
        ids: ids.clone(),
        emb_drop,
        x,
        steps,
        out,
        out_drop,
        hidden,
    }
}

pub fn backward<S: Scalar>(
    params: &ModelParams<S>,
    _cfg: &ModelConfig,
    cache: &GruCache<S>,
    d_hidden: &Array2<S>,
    grads: &mut ModelParams<S>,
) {
    let g = gru_params(params);
    let (b, t) = cache.ids.dim();
    let h = g.u_h.nrows();

    let (d_out_dropped, d_bridge_w, d_bridge_b) =
        linear_bwd(&cache.out, &g.bridge_w, d_hidden);
    let d_out = d_out_dropped * &cache.out_drop;

    let mut d_c_all = Array2::<S>::zeros((b * t, 3 * h));
    let mut d_u_acc = Array2::<S>::zeros(g.u_h.raw_dim());
    let mut d_state = Array2::<S>::zeros((b, h));
    for ti in (0..t).rev() {
        let step = &cache.steps[ti];
        let mut dh_t = d_state;
        for bi in 0..b {
            let mut row = dh_t.row_mut(bi);
            row += &d_out.row(bi * t + ti);
        }
        // h' = (1-z) n + z h_prev
        let one = S::one();
        let dz = Array2::from_shape_fn((b, h), |(i, j)| {
            dh_t[(i, j)] * (step.h_prev[(i, j)] - step.n[(i, j)])
        });
        let dn = Array2::from_shape_fn((b, h), |(i, j)| dh_t[(i, j)] * (one - step.z[(i, j)]));
        let mut dh_prev =
            Array2::from_shape_fn((b, h), |(i, j)| dh_t[(i, j)] * step.z[(i, j)]);
        // n = tanh(c_n + r * u_n)
        let dc_n = Array2::from_shape_fn((b, h), |(i, j)| {
            dn[(i, j)] * (one - step.n[(i, j)] * step.n[(i, j)])
        });
        let dr = Array2::from_shape_fn((b, h), |(i, j)| dc_n[(i, j)] * step.u_n[(i, j)]);
        let du_n = Array2::from_shape_fn((b, h), |(i, j)| dc_n[(i, j)] * step.r[(i, j)]);
        // gate pre-activations
        let dc_z = Array2::from_shape_fn((b, h), |(i, j)| {
            dz[(i, j)] * step.z[(i, j)] * (one - step.z[(i, j)])
        });
        let dc_r = Array2::from_shape_fn((b, h), |(i, j)| {
            dr[(i, j)] * step.r[(i, j)] * (one - step.r[(i, j)])
        });
        let mut du = Array2::<S>::zeros((b, 3 * h));
        du.slice_mut(s![.., 0..h]).assign(&dc_z);
        du.slice_mut(s![.., h..2 * h]).assign(&dc_r);
        du.slice_mut(s![.., 2 * h..3 * h]).assign(&du_n);
        for bi in 0..b {
            let mut row = d_c_all.row_mut(bi * t + ti);
            row.slice_mut(s![0..h]).assign(&dc_z.row(bi));
            row.slice_mut(s![h..2 * h]).assign(&dc_r.row(bi));
            row.slice_mut(s![2 * h..3 * h]).assign(&dc_n.row(bi));
        }
        d_u_acc += &step.h_prev.t().dot(&du);
        dh_prev += &du.dot(&g.u_h.t());
        d_state = dh_prev;
    }

    let (dx_dropped, d_w_x, d_b) = linear_bwd(&cache.x, &g.w_x, &d_c_all);
    let dx = dx_dropped * &cache.emb_drop;
    for bi in 0..b {
        for ti in 0..t {
            let id = cache.ids[(bi, ti)];
            let mut row = grads.embedding.row_mut(id);
            row += &dx.row(bi * t + ti);
        }
    }
    match &mut grads.arch {
        ArchParams::Gru(gg) => {
            gg.w_x += &d_w_x;
            gg.u_h += &d_u_acc;
            gg.b += &d_b;
            gg.bridge_w += &d_bridge_w;
            gg.bridge_b += &d_bridge_b;
        }
        ArchParams::Transformer { .. } => panic!("gradient layout mismatch"),
    }
}
