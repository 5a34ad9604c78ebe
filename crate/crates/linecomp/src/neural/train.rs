//! Training loop: padded whole-file batches, masked cross-entropy, Adam,
//! early stopping on validation loss.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::adam::Adam;
use super::config::{ModelConfig, TrainConfig};
use super::loss::{masked_nll, tied_output_loss};
use super::model::{backward, forward};
use super::params::ModelParams;
use crate::pycorpus::Vocab;
use crate::Scalar;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("empty dataset")]
    EmptyDataset,
    #[error("loss became non-finite at epoch {epoch}")]
    Diverged { epoch: usize },
}

#[derive(Debug, Clone)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

pub struct TrainOutcome<S> {
    /// Parameters from the best validation epoch, not the last one.
    pub params: ModelParams<S>,
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

/// One padded batch. `ids` is the `<bos>`-shifted input `(B, T)`;
/// `targets`/`mask` are row-major `(B*T)` aligned with the hidden rows.
pub struct Batch {
    pub ids: Array2<usize>,
    pub targets: Vec<usize>,
    pub mask: Vec<bool>,
}

impl Batch {
    pub fn n_targets(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Builds a batch from whole-file id sequences: inputs are each sequence
/// shifted right behind `<bos>`, targets are the unshifted sequence, and
/// rows are padded to the longest member.  Sequences longer than `max_len`
/// are truncated.
pub fn make_batch(seqs: &[&[usize]], max_len: usize) -> Batch {
    assert!(!seqs.is_empty());
    let pad = Vocab::PAD as usize;
    let bos = Vocab::BOS as usize;
    let lens: Vec<usize> = seqs.iter().map(|s| s.len().min(max_len)).collect();
    let t = *lens.iter().max().expect("nonempty batch");
    let b = seqs.len();
    let mut ids = Array2::from_elem((b, t), pad);
    let mut targets = vec![pad; b * t];
    let mut mask = vec![false; b * t];
    for (bi, seq) in seqs.iter().enumerate() {
        let l = lens[bi];
        ids[(bi, 0)] = bos;
        for ti in 1..l {
            ids[(bi, ti)] = seq[ti - 1];
        }
        for ti in 0..l {
            targets[bi * t + ti] = seq[ti];
            mask[bi * t + ti] = true;
        }
    }
    Batch { ids, targets, mask }
}

/// Mean nats per target token over a dataset, dropout off.
pub fn evaluate_nll<S: Scalar>(
    params: &ModelParams<S>,
    cfg: &ModelConfig,
    data: &[Vec<usize>],
    batch_size: usize,
) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for chunk in data.chunks(batch_size) {
        let refs: Vec<&[usize]> = chunk.iter().map(|s| s.as_slice()).collect();
        let batch = make_batch(&refs, cfg.max_len);
        let cache = forward::<S, ChaCha8Rng>(params, cfg, &batch.ids, None);
        let n = batch.n_targets();
        total += masked_nll(cache.hidden(), &params.embedding, &batch.targets, &batch.mask) * n as f64;
        count += n;
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

/// Trains from a fresh initialization.  Deterministic given the seed: the
/// same data and configs produce bit-identical parameters and history.
pub fn train<S: Scalar>(
    cfg: &ModelConfig,
    tcfg: &TrainConfig,
    train_data: &[Vec<usize>],
    val_data: &[Vec<usize>],
    mut progress: impl FnMut(&EpochStats),
) -> Result<TrainOutcome<S>, TrainError> {
    if train_data.is_empty() || val_data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(tcfg.seed);
    let mut params = ModelParams::<S>::init(cfg, &mut rng);
    let mut opt = Adam::new(&params);

    let mut order: Vec<usize> = (0..train_data.len()).collect();
    let mut history = Vec::new();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0usize;
    let mut best_params = params.clone();
    let mut stale = 0usize;

    for epoch in 1..=tcfg.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut target_count = 0usize;
        for chunk in order.chunks(tcfg.batch_size) {
            let refs: Vec<&[usize]> = chunk.iter().map(|&i| train_data[i].as_slice()).collect();
            let batch = make_batch(&refs, cfg.max_len);
            let cache = forward(&params, cfg, &batch.ids, Some(&mut rng));
            let (loss, d_hidden, d_emb_out) = tied_output_loss(
                cache.hidden(),
                &params.embedding,
                &batch.targets,
                &batch.mask,
            );
            if !loss.is_finite() {
                return Err(TrainError::Diverged { epoch });
            }
            let mut grads = params.zeros_like();
            grads.embedding += &d_emb_out;
            backward(&params, cfg, &cache, &d_hidden, &mut grads);
            opt.step(&mut params, &mut grads, tcfg);
            let n = batch.n_targets();
            loss_sum += loss * n as f64;
            target_count += n;
        }
        let train_loss = loss_sum / target_count.max(1) as f64;
        let val_loss = evaluate_nll(&params, cfg, val_data, tcfg.batch_size);
        if !val_loss.is_finite() {
            return Err(TrainError::Diverged { epoch });
        }
        let stats = EpochStats { epoch, train_loss, val_loss };
        progress(&stats);
        history.push(stats);

        if val_loss < best_val {
            best_val = val_loss;
            best_epoch = epoch;
            best_params = params.clone();
            stale = 0;
        } else {
            stale += 1;
            if stale > tcfg.patience {
                break;
            }
        }
    }

    Ok(TrainOutcome {
        params: best_params,
        history,
        best_epoch,
        best_val_loss: best_val,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::config::Arch;

    fn tiny_cfg() -> ModelConfig {
        let mut cfg = ModelConfig::transformer(12);
        cfg.d_model = 16;
        cfg.d_embed = 16;
        cfg.d_ff = 32;
        cfg.n_heads = 2;
        cfg.n_layers = 1;
        cfg.max_len = 12;
        cfg.dropout_keep = 1.0;
        cfg
    }

    fn toy_data() -> Vec<Vec<usize>> {
        // Deterministic cyclic sequences over ids 5..12.
        (0..6)
            .map(|k| (0..8).map(|i| 5 + (k + i) % 7).collect())
            .collect()
    }

    #[test]
    fn batches_shift_behind_bos_and_pad() {
        let a = vec![7usize, 8, 9];
        let b = vec![5usize, 6];
        let batch = make_batch(&[&a, &b], 10);
        assert_eq!(batch.ids.dim(), (2, 3));
        assert_eq!(batch.ids.row(0).to_vec(), vec![4, 7, 8]);
        assert_eq!(batch.ids.row(1).to_vec(), vec![4, 5, 0]);
        assert_eq!(batch.targets, vec![7, 8, 9, 5, 6, 0]);
        assert_eq!(batch.mask, vec![true, true, true, true, true, false]);
    }

    #[test]
    fn loss_drops_while_memorizing() {
        let cfg = tiny_cfg();
        let mut tcfg = TrainConfig::for_arch(Arch::Transformer);
        tcfg.max_epochs = 30;
        tcfg.lr = 1e-2;
        tcfg.batch_size = 3;
        let data = toy_data();
        let out = train::<f64>(&cfg, &tcfg, &data, &data, |_| {}).expect("training");
        let first = out.history.first().unwrap().train_loss;
        let last = out.best_val_loss;
        assert!(last < first * 0.5, "no progress: {first} -> {last}");
    }

    #[test]
    fn identical_runs_agree_exactly() {
        let cfg = tiny_cfg();
        let mut tcfg = TrainConfig::for_arch(Arch::Transformer);
        tcfg.max_epochs = 3;
        let data = toy_data();
        let a = train::<f32>(&cfg, &tcfg, &data, &data, |_| {}).unwrap();
        let b = train::<f32>(&cfg, &tcfg, &data, &data, |_| {}).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.history.len(), b.history.len());
        for (x, y) in a.history.iter().zip(&b.history) {
            assert_eq!(x.train_loss.to_bits(), y.train_loss.to_bits());
            assert_eq!(x.val_loss.to_bits(), y.val_loss.to_bits());
        }
    }

    #[test]
    fn exploding_steps_are_reported_not_propagated() {
        let cfg = tiny_cfg();
        let mut tcfg = TrainConfig::for_arch(Arch::Transformer);
        tcfg.lr = f64::NAN;
        tcfg.max_epochs = 5;
        let data = toy_data();
        match train::<f64>(&cfg, &tcfg, &data, &data, |_| {}) {
            Err(TrainError::Diverged { .. }) => {}
            other => panic!(
                "expected divergence, got {:?}",
                other.err().map(|e| e.to_string())
            ),
        }
    }

    #[test]
    fn empty_datasets_are_rejected() {
        let cfg = tiny_cfg();
        let tcfg = TrainConfig::for_arch(Arch::Transformer);
        assert!(matches!(
            train::<f32>(&cfg, &tcfg, &[], &toy_data(), |_| {}),
            Err(TrainError::EmptyDataset)
        ));
    }
}
