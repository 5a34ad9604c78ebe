//! Adam with global-norm gradient clipping.

use super::config::TrainConfig;
use super::params::ModelParams;
use crate::Scalar;

pub struct Adam<S> {
    m: ModelParams<S>,
    v: ModelParams<S>,
    step: u64,
}

impl<S: Scalar> Adam<S> {
    pub fn new(params: &ModelParams<S>) -> Self {
        Adam {
            m: params.zeros_like(),
            v: params.zeros_like(),
            step: 0,
        }
    }

    /// Clips `grads` to the configured global norm, then applies one
    /// bias-corrected Adam update in place.
    pub fn step(&mut self, params: &mut ModelParams<S>, grads: &mut ModelParams<S>, cfg: &TrainConfig) {
        let norm = grads.global_norm();
        if norm > cfg.clip_norm {
            let scale = S::from_f64(cfg.clip_norm / norm);
            grads.for_each_mut(|g| *g = *g * scale);
        }

        self.step += 1;
        let t = self.step as f64;
        let b1 = S::from_f64(cfg.beta1);
        let b2 = S::from_f64(cfg.beta2);
        let one = S::one();
        // Fold both bias corrections into the step size.
        let alpha = cfg.lr * (1.0 - cfg.beta2.powf(t)).sqrt() / (1.0 - cfg.beta1.powf(t));
        let alpha = S::from_f64(alpha);
        let eps = S::from_f64(cfg.eps);

        self.m.zip_mut_with(grads, |m, &g| *m = b1 * *m + (one - b1) * g);
        self.v
            .zip_mut_with(grads, |v, &g| *v = b2 * *v + (one - b2) * g * g);
        params.zip2_mut_with(&self.m, &self.v, |p, &m, &v| {
            *p = *p - alpha * m / (v.sqrt() + eps);
        });
    }
}
