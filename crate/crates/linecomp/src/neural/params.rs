use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::config::{Arch, ModelConfig};
use crate::Scalar;

/// One pre-norm transformer block.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<S> {
    pub ln1_g: Array1<S>,
    pub ln1_b: Array1<S>,
    pub wq: Array2<S>,
    pub bq: Array1<S>,
    pub wk: Array2<S>,
    pub bk: Array1<S>,
    pub wv: Array2<S>,
    pub bv: Array1<S>,
    pub wo: Array2<S>,
    pub bo: Array1<S>,
    pub ln2_g: Array1<S>,
    pub ln2_b: Array1<S>,
    pub w1: Array2<S>,
    pub b1: Array1<S>,
    pub w2: Array2<S>,
    pub b2: Array1<S>,
}

/// Gated recurrent unit with batched gate weights. Gate order inside the
/// `3H` axis is update, reset, candidate; the candidate's recurrent term
/// is gated after the matrix product (`r * (h U_n)`).
#[derive(Debug, Clone, PartialEq)]
pub struct GruParams<S> {
    pub w_x: Array2<S>,
    pub u_h: Array2<S>,
    pub b: Array1<S>,
    /// Projects the hidden state down to the embedding width so logits
    /// can share the embedding matrix.
    pub bridge_w: Array2<S>,
    pub bridge_b: Array1<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArchParams<S> {
    Transformer {
        layers: Vec<LayerParams<S>>,
        lnf_g: Array1<S>,
        lnf_b: Array1<S>,
    },
    Gru(GruParams<S>),
}

/// All trainable tensors. The embedding matrix is shared between input
/// lookup and the output projection (tied weights). Positional encodings
/// are deterministic and live outside the parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<S> {
    pub embedding: Array2<S>,
    pub arch: ArchParams<S>,
}

pub enum TensorView<'a, S> {
    V(&'a Array1<S>),
    M(&'a Array2<S>),
}

pub enum TensorViewMut<'a, S> {
    V(&'a mut Array1<S>),
    M(&'a mut Array2<S>),
}

impl<'a, S: Scalar> TensorView<'a, S> {
    pub fn dims(&self) -> Vec<usize> {
        match self {
            TensorView::V(a) => vec![a.len()],
            TensorView::M(a) => a.shape().to_vec(),
        }
    }

    pub fn iter(&self) -> Box<dyn Iterator<Item = &'a S> + 'a> {
        match self {
            TensorView::V(a) => Box::new(a.iter()),
            TensorView::M(a) => Box::new(a.iter()),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            TensorView::V(a) => a.len(),
            TensorView::M(a) => a.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<S: Scalar> TensorViewMut<'_, S> {
    pub fn dims(&self) -> Vec<usize> {
        match self {
            TensorViewMut::V(a) => vec![a.len()],
            TensorViewMut::M(a) => a.shape().to_vec(),
        }
    }

    /// Overwrites every element in row-major order.
    pub fn fill_from(&mut self, mut next: impl FnMut() -> S) {
        match self {
            TensorViewMut::V(a) => a.iter_mut().for_each(|v| *v = next()),
            TensorViewMut::M(a) => a.iter_mut().for_each(|v| *v = next()),
        }
    }
}

impl<S: Scalar> ModelParams<S> {
    /// Gaussian init (sigma 0.02) for weights and embeddings; zero biases;
    /// unit layer-norm gains.
    pub fn init<R: Rng>(cfg: &ModelConfig, rng: &mut R) -> Self {
        let dist = Normal::new(0.0f64, 0.02).expect("valid sigma");
        Self::build(cfg, |r, c| {
            Array2::from_shape_fn((r, c), |_| S::from_f64(dist.sample(rng)))
        })
    }

    /// All-zero parameters with the shapes `cfg` implies; checkpoint
    /// loading fills these in.
    pub fn zeros(cfg: &ModelConfig) -> Self {
        let mut out = Self::build(cfg, |r, c| Array2::zeros((r, c)));
        // Gains start at one in `build`; a loaded checkpoint overwrites
        // every tensor anyway.
        out.for_each_mut(|v| *v = S::zero());
        out
    }

    fn build(cfg: &ModelConfig, mut w: impl FnMut(usize, usize) -> Array2<S>) -> Self {
        let embedding = w(cfg.vocab, cfg.d_embed);
        let arch = match cfg.arch {
            Arch::Transformer => {
                assert_eq!(
                    cfg.d_embed, cfg.d_model,
                    "tied embeddings need d_embed == d_model"
                );
                assert_eq!(cfg.d_model % cfg.n_heads, 0, "heads must divide d_model");
                let d = cfg.d_model;
                let mut layers = Vec::with_capacity(cfg.n_layers);
                for _ in 0..cfg.n_layers {
                    layers.push(LayerParams {
                        ln1_g: Array1::from_elem(d, S::one()),
                        ln1_b: Array1::zeros(d),
                        wq: w(d, d),
                        bq: Array1::zeros(d),
                        wk: w(d, d),
                        bk: Array1::zeros(d),
                        wv: w(d, d),
                        bv: Array1::zeros(d),
                        wo: w(d, d),
                        bo: Array1::zeros(d),
                        ln2_g: Array1::from_elem(d, S::one()),
                        ln2_b: Array1::zeros(d),
                        w1: w(d, cfg.d_ff),
                        b1: Array1::zeros(cfg.d_ff),
                        w2: w(cfg.d_ff, d),
                        b2: Array1::zeros(d),
                    });
                }
                ArchParams::Transformer {
                    layers,
                    lnf_g: Array1::from_elem(d, S::one()),
                    lnf_b: Array1::zeros(d),
                }
            }
            Arch::Gru => {
                let h = cfg.gru_hidden;
                ArchParams::Gru(GruParams {
                    w_x: w(cfg.d_embed, 3 * h),
                    u_h: w(h, 3 * h),
                    b: Array1::zeros(3 * h),
                    bridge_w: w(h, cfg.d_embed),
                    bridge_b: Array1::zeros(cfg.d_embed),
                })
            }
        };
        Self { embedding, arch }
    }

    /// Tensors in fixed definition order; this order is the checkpoint
    /// layout and must not change.
    pub fn tensors(&self) -> Vec<(String, TensorView<'_, S>)> {
        use TensorView::{M, V};
        let mut out: Vec<(String, TensorView<S>)> =
            vec![("embedding".into(), M(&self.embedding))];
        match &self.arch {
            ArchParams::Transformer {
                layers,
                lnf_g,
                lnf_b,
            } => {
                for (i, l) in layers.iter().enumerate() {
                    let name = |s: &str| format!("layer{i}.{s}");
                    out.push((name("ln1_g"), V(&l.ln1_g)));
                    out.push((name("ln1_b"), V(&l.ln1_b)));
                    out.push((name("wq"), M(&l.wq)));
                    out.push((name("bq"), V(&l.bq)));
                    out.push((name("wk"), M(&l.wk)));
                    out.push((name("bk"), V(&l.bk)));
                    out.push((name("wv"), M(&l.wv)));
                    out.push((name("bv"), V(&l.bv)));
                    out.push((name("wo"), M(&l.wo)));
                    out.push((name("bo"), V(&l.bo)));
                    out.push((name("ln2_g"), V(&l.ln2_g)));
                    out.push((name("ln2_b"), V(&l.ln2_b)));
                    out.push((name("w1"), M(&l.w1)));
                    out.push((name("b1"), V(&l.b1)));
                    out.push((name("w2"), M(&l.w2)));
                    out.push((name("b2"), V(&l.b2)));
                }
                out.push(("lnf_g".into(), V(lnf_g)));
                out.push(("lnf_b".into(), V(lnf_b)));
            }
            ArchParams::Gru(g) => {
                out.push(("gru.w_x".into(), M(&g.w_x)));
                out.push(("gru.u_h".into(), M(&g.u_h)));
                out.push(("gru.b".into(), V(&g.b)));
                out.push(("gru.bridge_w".into(), M(&g.bridge_w)));
                out.push(("gru.bridge_b".into(), V(&g.bridge_b)));
            }
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, TensorViewMut<'_, S>)> {
        use TensorViewMut::{M, V};
        let mut out: Vec<(String, TensorViewMut<S>)> =
            vec![("embedding".into(), M(&mut self.embedding))];
        match &mut self.arch {
            ArchParams::Transformer {
                layers,
                lnf_g,
                lnf_b,
            } => {
                for (i, l) in layers.iter_mut().enumerate() {
                    let name = |s: &str| format!("layer{i}.{s}");
                    out.push((name("ln1_g"), V(&mut l.ln1_g)));
                    out.push((name("ln1_b"), V(&mut l.ln1_b)));
                    out.push((name("wq"), M(&mut l.wq)));
                    out.push((name("bq"), V(&mut l.bq)));
                    out.push((name("wk"), M(&mut l.wk)));
                    out.push((name("bk"), V(&mut l.bk)));
                    out.push((name("wv"), M(&mut l.wv)));
                    out.push((name("bv"), V(&mut l.bv)));
                    out.push((name("wo"), M(&mut l.wo)));
                    out.push((name("bo"), V(&mut l.bo)));
                    out.push((name("ln2_g"), V(&mut l.ln2_g)));
                    out.push((name("ln2_b"), V(&mut l.ln2_b)));
                    out.push((name("w1"), M(&mut l.w1)));
                    out.push((name("b1"), V(&mut l.b1)));
                    out.push((name("w2"), M(&mut l.w2)));
                    out.push((name("b2"), V(&mut l.b2)));
                }
                out.push(("lnf_g".into(), V(lnf_g)));
                out.push(("lnf_b".into(), V(lnf_b)));
            }
            ArchParams::Gru(g) => {
                out.push(("gru.w_x".into(), M(&mut g.w_x)));
                out.push(("gru.u_h".into(), M(&mut g.u_h)));
                out.push(("gru.b".into(), V(&mut g.b)));
                out.push(("gru.bridge_w".into(), M(&mut g.bridge_w)));
                out.push(("gru.bridge_b".into(), V(&mut g.bridge_b)));
            }
        }
        out
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.for_each_mut(|v| *v = S::zero());
        z
    }

    pub fn n_params(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn for_each(&self, mut f: impl FnMut(&S)) {
        for (_, t) in self.tensors() {
            match t {
                TensorView::V(a) => a.iter().for_each(&mut f),
                TensorView::M(a) => a.iter().for_each(&mut f),
            }
        }
    }

    pub fn for_each_mut(&mut self, mut f: impl FnMut(&mut S)) {
        for (_, t) in self.tensors_mut() {
            match t {
                TensorViewMut::V(a) => a.iter_mut().for_each(&mut f),
                TensorViewMut::M(a) => a.iter_mut().for_each(&mut f),
            }
        }
    }

    /// Pairs every element of `self` with the matching element of
    /// `other`; both must have identical layout.
    pub fn zip_mut_with(&mut self, other: &Self, mut f: impl FnMut(&mut S, &S)) {
        let mine = self.tensors_mut();
        let theirs = other.tensors();
        debug_assert_eq!(mine.len(), theirs.len());
        for ((_, a), (_, b)) in mine.into_iter().zip(theirs) {
            match (a, b) {
                (TensorViewMut::V(x), TensorView::V(y)) => {
                    x.iter_mut().zip(y.iter()).for_each(|(x, y)| f(x, y))
                }
                (TensorViewMut::M(x), TensorView::M(y)) => {
                    x.iter_mut().zip(y.iter()).for_each(|(x, y)| f(x, y))
                }
                _ => panic!("parameter layouts differ"),
            }
        }
    }

    /// Three-way elementwise update (parameter, first moment, second
    /// moment), used by the optimizer.
    pub fn zip2_mut_with(&mut self, a: &Self, b: &Self, mut f: impl FnMut(&mut S, &S, &S)) {
        let mine = self.tensors_mut();
        let av = a.tensors();
        let bv = b.tensors();
        for (((_, p), (_, x)), (_, y)) in mine.into_iter().zip(av).zip(bv) {
            match (p, x, y) {
                (TensorViewMut::V(p), TensorView::V(x), TensorView::V(y)) => p
                    .iter_mut()
                    .zip(x.iter())
                    .zip(y.iter())
                    .for_each(|((p, x), y)| f(p, x, y)),
                (TensorViewMut::M(p), TensorView::M(x), TensorView::M(y)) => p
                    .iter_mut()
                    .zip(x.iter())
                    .zip(y.iter())
                    .for_each(|((p, x), y)| f(p, x, y)),
                _ => panic!("parameter layouts differ"),
            }
        }
    }

    /// Euclidean norm of all elements, accumulated in f64.
    pub fn global_norm(&self) -> f64 {
        let mut acc = 0.0f64;
        self.for_each(|v| {
            let x = v.to_f64_lossy();
            acc += x * x;
        });
        acc.sqrt()
    }

    /// Reads the element at a flat index (definition order).
    pub fn get_flat(&self, index: usize) -> S {
        let mut i = 0;
        let mut out = None;
        self.for_each(|v| {
            if i == index {
                out = Some(*v);
            }
            i += 1;
        });
        out.expect("flat index in range")
    }

    /// Adds `delta` to the element at a flat index.
    pub fn perturb(&mut self, index: usize, delta: S) {
        let mut i = 0;
        self.for_each_mut(|v| {
            if i == index {
                *v = *v + delta;
            }
            i += 1;
        });
    }
}
