//! GPT-style decoder: pre-norm blocks, causal multi-head attention, GELU
//! feed-forward, sinusoidal positions, tied input/output embedding.
//!
//! Activations are stored as `(B*T, d)` matrices; attention slices per
//! sequence and head. The backward pass consumes the forward cache and
//! accumulates into a gradient container with the same parameter layout.

use ndarray::{s, Array1, Array2};
use rand::Rng;

use super::config::ModelConfig;
use super::ops::{
    dropout_mask, gelu, gelu_bwd, layer_norm, layer_norm_bwd, linear, linear_bwd, softmax_rows,
    softmax_rows_bwd, LayerNormCache,
};
use super::params::{ArchParams, LayerParams, ModelParams};
use crate::pycorpus::Vocab;
use crate::Scalar;

/// Sinusoidal positional encodings: even dims carry `sin`, odd dims carry
/// `cos` at the same frequency, `pos / 10000^(2i/d)`.
pub fn positional_encoding<S: Scalar>(t: usize, d: usize) -> Array2<S> {
    Array2::from_shape_fn((t, d), |(pos, k)| {
        let i = (k / 2) as f64;
        let exponent = 2.0 * i / d as f64;
        let angle = pos as f64 / 10000f64.powf(exponent);
        if k % 2 == 0 {
            S::from_f64(angle.sin())
        } else {
            S::from_f64(angle.cos())
        }
    })
}

pub struct LayerCache<S> {
    ln1: LayerNormCache<S>,
    ln1_out: Array2<S>,
    q: Array2<S>,
    k: Array2<S>,
    v: Array2<S>,
    /// Attention probabilities, one `(T, T)` matrix per `(seq, head)`.
    probs: Vec<Array2<S>>,
    ctx: Array2<S>,
    attn_drop: Array2<S>,
    ln2: LayerNormCache<S>,
    ln2_out: Array2<S>,
    ff_pre: Array2<S>,
    ff_act: Array2<S>,
    ff_drop: Array2<S>,
}

pub struct TransformerCache<S> {
    ids: Array2<usize>,
    emb_drop: Array2<S>,
    layers: Vec<LayerCache<S>>,
    lnf: LayerNormCache<S>,
    /// Final hidden states `(B*T, d)` after the last layer norm.
    pub hidden: Array2<S>,
}

fn transformer_parts<S>(
    params: &ModelParams<S>,
) -> (&Vec<LayerParams<S>>, &Array1<S>, &Array1<S>) {
    match &params.arch {
        ArchParams::Transformer {
            layers,
            lnf_g,
            lnf_b,
        } => (layers, lnf_g, lnf_b),
        ArchParams::Gru(_) => panic!("transformer pass over GRU parameters"),
    }
}

/// Runs the decoder over a padded id batch `(B, T)`. Pass a generator to
/// enable dropout (training); `None` runs deterministically (eval).
pub fn forward<S: Scalar, R: Rng>(
    params: &ModelParams<S>,
    cfg: &ModelConfig,
    ids: &Array2<usize>,
    mut rng: Option<&mut R>,
) -> TransformerCache<S> {
    let (layers, lnf_g, lnf_b) = transformer_parts(params);
    let (b, t) = ids.dim();
    assert!(t <= cfg.max_len, "sequence length {t} over budget");
    let d = cfg.d_model;
    let n = b * t;
    let keep = cfg.dropout_keep;

    let pe = positional_encoding::<S>(t, d);
    let mut h = Array2::<S>::zeros((n, d));
    for bi in 0..b {
        for ti in 0..t {
            let id = ids[(bi, ti)];
            let mut row = h.row_mut(bi * t + ti);
            row.assign(&params.embedding.row(id));
            row += &pe.row(ti);
        }
    }
    let emb_drop = match rng.as_deref_mut() {
        Some(r) => dropout_mask((n, d), keep, r),
        None => Array2::from_elem((n, d), S::one()),
    };
    h = h * &emb_drop;

    let heads = cfg.n_heads;
    let dk = cfg.head_dim();
    let scale = S::from_f64(1.0 / (dk as f64).sqrt());
    let mut caches = Vec::with_capacity(layers.len());
    for l in layers {
        let h_in = h;
        let (ln1_out, ln1) = layer_norm(&h_in, &l.ln1_g, &l.ln1_b);
        let q = linear(&ln1_out, &l.wq, &l.bq);
        let k = linear(&ln1_out, &l.wk, &l.bk);
        let v = linear(&ln1_out, &l.wv, &l.bv);
        let mut ctx = Array2::<S>::zeros((n, d));
        let mut probs = Vec::with_capacity(b * heads);
        for bi in 0..b {
            let rows = s![bi * t..(bi + 1) * t, ..];
            for hi in 0..heads {
                let cols = s![.., hi * dk..(hi + 1) * dk];
                let qh = q.slice(rows).slice_move(cols);
                let kh = k.slice(rows).slice_move(cols);
                let vh = v.slice(rows).slice_move(cols);
                let mut scores = qh.dot(&kh.t());
                scores.mapv_inplace(|s| s * scale);
                for i in 0..t {
                    for j in 0..t {
                        if j > i || ids[(bi, j)] == Vocab::PAD as usize {
                            scores[(i, j)] = S::neg_infinity();
                        }
                    }
                }
                let a = softmax_rows(&scores);
                let ctxh = a.dot(&vh);
                ctx.slice_mut(rows).slice_move(cols).assign(&ctxh);
                probs.push(a);
            }
        }
        let proj = linear(&ctx, &l.wo, &l.bo);
        let attn_drop = match rng.as_deref_mut() {
            Some(r) => dropout_mask((n, d), keep, r),
            None => Array2::from_elem((n, d), S::one()),
        };
        let a_res = &h_in + &(proj * &attn_drop);

        let (ln2_out, ln2) = layer_norm(&a_res, &l.ln2_g, &l.ln2_b);
        let ff_pre = linear(&ln2_out, &l.w1, &l.b1);
        let ff_act = gelu(&ff_pre);
        let ff_out = linear(&ff_act, &l.w2, &l.b2);
        let ff_drop = match rng.as_deref_mut() {
            Some(r) => dropout_mask((n, d), keep, r),
            None => Array2::from_elem((n, d), S::one()),
        };
        h = &a_res + &(ff_out * &ff_drop);

        caches.push(LayerCache {
            ln1,
            ln1_out,
            q,
            k,
            v,
            probs,
            ctx,
            attn_drop,
            ln2,
            ln2_out,
            ff_pre,
            ff_act,
            ff_drop,
        });
    }
    let (hidden, lnf) = layer_norm(&h, lnf_g, lnf_b);
    TransformerCache {
        ids: ids.clone(),
        emb_drop,
        layers: caches,
        lnf,
        hidden,
    }
}

/// Propagates `d_hidden` (gradient at the final hidden states) back to
/// every parameter, accumulating into `grads`.
pub fn backward<S: Scalar>(
    params: &ModelParams<S>,
    cfg: &ModelConfig,
    cache: &TransformerCache<S>,
    d_hidden: &Array2<S>,
    grads: &mut ModelParams<S>,
) {
    let (layers, lnf_g, _) = transformer_parts(params);
    let (b, t) = cache.ids.dim();
    let heads = cfg.n_heads;
    let dk = cfg.head_dim();
    let scale = S::from_f64(1.0 / (dk as f64).sqrt());

    let (mut dh, dlnf_g, dlnf_b) = layer_norm_bwd(&cache.lnf, lnf_g, d_hidden);
    {
        let (glayers, glnf_g, glnf_b) = match &mut grads.arch {
            ArchParams::Transformer {
                layers,
                lnf_g,
                lnf_b,
            } => (layers, lnf_g, lnf_b),
            ArchParams::Gru(_) => panic!("gradient layout mismatch"),
        };
        debug_assert_eq!(glayers.len(), layers.len());
        *glnf_g += &dlnf_g;
        *glnf_b += &dlnf_b;
    }

    for (li, l) in layers.iter().enumerate().rev() {
        let c = &cache.layers[li];
        // h = a + ff_drop * linear(gelu(linear(ln2(a))))
        let d_ff_out = &dh * &c.ff_drop;
        let (d_ff_act, dw2, db2) = linear_bwd(&c.ff_act, &l.w2, &d_ff_out);
        let d_ff_pre = gelu_bwd(&c.ff_pre, &d_ff_act);
        let (d_ln2_out, dw1, db1) = linear_bwd(&c.ln2_out, &l.w1, &d_ff_pre);
        let (d_a_norm, dln2_g, dln2_b) = layer_norm_bwd(&c.ln2, &l.ln2_g, &d_ln2_out);
        let da = &dh + &d_a_norm;

        // a = h_in + attn_drop * linear(ctx)
        let d_proj = &da * &c.attn_drop;
        let (d_ctx, dwo, dbo) = linear_bwd(&c.ctx, &l.wo, &d_proj);
        let mut dq = Array2::<S>::zeros(c.q.raw_dim());
        let mut dkm = Array2::<S>::zeros(c.k.raw_dim());
        let mut dv = Array2::<S>::zeros(c.v.raw_dim());
        for bi in 0..b {
            let rows = s![bi * t..(bi + 1) * t, ..];
            for hi in 0..heads {
                let cols = s![.., hi * dk..(hi + 1) * dk];
                let a = &c.probs[bi * heads + hi];
                let qh = c.q.slice(rows).slice_move(cols);
                let kh = c.k.slice(rows).slice_move(cols);
                let vh = c.v.slice(rows).slice_move(cols);
                let d_ctxh = d_ctx.slice(rows).slice_move(cols).to_owned();
                let d_a = d_ctxh.dot(&vh.t());
                let d_vh = a.t().dot(&d_ctxh);
                let mut d_s = softmax_rows_bwd(a, &d_a);
                d_s.mapv_inplace(|x| x * scale);
                let d_qh = d_s.dot(&kh);
                let d_kh = d_s.t().dot(&qh);
                dq.slice_mut(rows).slice_move(cols).assign(&d_qh);
                dkm.slice_mut(rows).slice_move(cols).assign(&d_kh);
                dv.slice_mut(rows).slice_move(cols).assign(&d_vh);
            }
        }
        let (dx_q, dwq, dbq) = linear_bwd(&c.ln1_out, &l.wq, &dq);
        let (dx_k, dwk, dbk) = linear_bwd(&c.ln1_out, &l.wk, &dkm);
        let (dx_v, dwv, dbv) = linear_bwd(&c.ln1_out, &l.wv, &dv);
        let d_ln1_out = dx_q + dx_k + dx_v;
        let (d_h_norm, dln1_g, dln1_b) = layer_norm_bwd(&c.ln1, &l.ln1_g, &d_ln1_out);
        dh = &da + &d_h_norm;

        let glayers = match &mut grads.arch {
            ArchParams::Transformer { layers, .. } => layers,
            ArchParams::Gru(_) => unreachable!(),
        };
        let g = &mut glayers[li];
        g.ln1_g += &dln1_g;
        g.ln1_b += &dln1_b;
        g.wq += &dwq;
        g.bq += &dbq;
        g.wk += &dwk;
        g.bk += &dbk;
        g.wv += &dwv;
        g.bv += &dbv;
        g.wo += &dwo;
        g.bo += &dbo;
        g.ln2_g += &dln2_g;
        g.ln2_b += &dln2_b;
        g.w1 += &dw1;
        g.b1 += &db1;
        g.w2 += &dw2;
        g.b2 += &db2;
    }

    let dh0 = dh * &cache.emb_drop;
    for bi in 0..b {
        for ti in 0..t {
            let id = cache.ids[(bi, ti)];
            let mut row = grads.embedding.row_mut(id);
            row += &dh0.row(bi * t + ti);
        }
    }
}
