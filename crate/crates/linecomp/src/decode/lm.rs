//! Search-facing adapter over a trained network.

use ndarray::Array1;

use crate::neural::{sequence_log_probs, ModelConfig, ModelParams};
use crate::pycorpus::Vocab;
use crate::Scalar;

use super::domain::SequenceModel;

/// Conditions every query on `<bos>` plus a fixed context prefix.
///
/// Each query re-runs the network over the full prefix; correctness is
/// defined by the uncached forward pass, and completion lengths are small
/// enough that the quadratic cost stays tolerable.
pub struct NeuralLm<'a, S: Scalar> {
    params: &'a ModelParams<S>,
    cfg: &'a ModelConfig,
    prefix: Vec<usize>,
}

impl<'a, S: Scalar> NeuralLm<'a, S> {
    pub fn new(params: &'a ModelParams<S>, cfg: &'a ModelConfig, context: &[usize]) -> Self {
        let mut prefix = Vec::with_capacity(context.len() + 1);
        prefix.push(Vocab::BOS as usize);
        prefix.extend_from_slice(context);
        NeuralLm {
            params,
            cfg,
            prefix,
        }
    }

    pub fn context_len(&self) -> usize {
        self.prefix.len() - 1
    }
}

impl<S: Scalar> SequenceModel for NeuralLm<'_, S> {
    fn next_log_probs(&self, emitted: &[usize]) -> Array1<f64> {
        let mut ids = self.prefix.clone();
        ids.extend_from_slice(emitted);
        let lp = sequence_log_probs(self.params, self.cfg, &ids);
        lp.row(lp.nrows() - 1).mapv(|v| v.to_f64_lossy())
    }

    fn vocab_size(&self) -> usize {
        self.cfg.vocab
    }
}
