//! Cross-entropy over the tied output projection.
//!
//! Logits are `hidden · Eᵀ` with `E` the input embedding matrix.  The full
//! `(rows, vocab)` logit matrix is never materialised at once: rows are
//! processed in fixed-size chunks, which keeps peak memory proportional to
//! `CHUNK * vocab` regardless of batch and sequence length.

use ndarray::{s, Array1, Array2};

use super::ops::{log_softmax, log_softmax_rows};
use crate::Scalar;

const CHUNK: usize = 512;

/// Mean negative log-likelihood in nats per unmasked target token.
///
/// `hidden` is `(rows, d_embed)`, `targets` and `mask` are per-row; masked
/// rows (padding and context positions) contribute neither loss nor
/// gradient.  Returns the loss together with gradients for `hidden` and for
/// the output-side use of the embedding; the caller adds the input-side
/// scatter separately.
pub fn tied_output_loss<S: Scalar>(
    hidden: &Array2<S>,
    embedding: &Array2<S>,
    targets: &[usize],
    mask: &[bool],
) -> (f64, Array2<S>, Array2<S>) {
    let rows = hidden.nrows();
    assert_eq!(targets.len(), rows);
    assert_eq!(mask.len(), rows);
    let count = mask.iter().filter(|&&m| m).count();
    let mut d_hidden = Array2::<S>::zeros(hidden.raw_dim());
    let mut d_embedding = Array2::<S>::zeros(embedding.raw_dim());
    if count == 0 {
        return (0.0, d_hidden, d_embedding);
    }
    let inv_count = S::from_f64(1.0 / count as f64);

    let mut total = 0.0f64;
    let mut start = 0;
    while start < rows {
        let end = (start + CHUNK).min(rows);
        let h_c = hidden.slice(s![start..end, ..]);
        let logits = h_c.dot(&embedding.t());
        let logp = log_softmax_rows(&logits);
        let mut d_logits = Array2::<S>::zeros(logits.raw_dim());
        for (i, row) in (start..end).enumerate() {
            if !mask[row] {
                continue;
            }
            let tgt = targets[row];
            total -= logp[(i, tgt)].to_f64_lossy();
            let mut d_row = d_logits.row_mut(i);
            let lp_row = logp.row(i);
            for j in 0..d_row.len() {
                d_row[j] = lp_row[j].exp() * inv_count;
            }
            d_row[tgt] = d_row[tgt] - inv_count;
        }
        d_hidden
            .slice_mut(s![start..end, ..])
            .assign(&d_logits.dot(embedding));
        d_embedding += &d_logits.t().dot(&h_c);
        start = end;
    }
    (total / count as f64, d_hidden, d_embedding)
}

/// Loss-only variant of [`tied_output_loss`] for validation passes.
pub fn masked_nll<S: Scalar>(
    hidden: &Array2<S>,
    embedding: &Array2<S>,
    targets: &[usize],
    mask: &[bool],
) -> f64 {
    let rows = hidden.nrows();
    assert_eq!(targets.len(), rows);
    assert_eq!(mask.len(), rows);
    let count = mask.iter().filter(|&&m| m).count();
    if count == 0 {
        return 0.0;
    }
    let mut total = 0.0f64;
    let mut start = 0;
    while start < rows {
        let end = (start + CHUNK).min(rows);
        let logits = hidden.slice(s![start..end, ..]).dot(&embedding.t());
        let logp = log_softmax_rows(&logits);
        for (i, row) in (start..end).enumerate() {
            if mask[row] {
                total -= logp[(i, targets[row])].to_f64_lossy();
            }
        }
        start = end;
    }
    total / count as f64
}

/// Log-distribution over the vocabulary for a single hidden row, used at
/// decode time.
pub fn next_log_probs<S: Scalar>(hidden_row: &Array1<S>, embedding: &Array2<S>) -> Array1<S> {
    let logits = embedding.dot(hidden_row);
    log_softmax(&logits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn randn(rng: &mut ChaCha8Rng, shape: (usize, usize)) -> Array2<f64> {
        Array::from_shape_simple_fn(shape, || StandardNormal.sample(rng))
    }

    #[test]
    fn loss_matches_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let hidden = randn(&mut rng, (5, 4));
        let emb = randn(&mut rng, (7, 4));
        let targets = [2usize, 0, 6, 1, 3];
        let mask = [true, true, false, true, true];
        let (loss, _, _) = tied_output_loss(&hidden, &emb, &targets, &mask);

        let mut direct = 0.0;
        for i in [0usize, 1, 3, 4] {
            let logits: Vec<f64> = (0..7).map(|v| hidden.row(i).dot(&emb.row(v))).collect();
            let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + logits.iter().map(|&x| (x - m).exp()).sum::<f64>().ln();
            direct += lse - logits[targets[i]];
        }
        direct /= 4.0;
        assert!((loss - direct).abs() < 1e-12, "{loss} vs {direct}");
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let hidden = randn(&mut rng, (3, 4));
        let emb = randn(&mut rng, (6, 4));
        let targets = [5usize, 1, 2];
        let mask = [true, false, true];
        let (_, d_hidden, d_emb) = tied_output_loss(&hidden, &emb, &targets, &mask);

        let eps = 1e-6;
        for idx in [(0, 0), (1, 2), (2, 3)] {
            let mut hp = hidden.clone();
            hp[idx] += eps;
            let mut hm = hidden.clone();
            hm[idx] -= eps;
            let (lp, _, _) = tied_output_loss(&hp, &emb, &targets, &mask);
            let (lm, _, _) = tied_output_loss(&hm, &emb, &targets, &mask);
            let num = (lp - lm) / (2.0 * eps);
            assert!((num - d_hidden[idx]).abs() < 1e-7, "hidden {idx:?}");
        }
        for idx in [(0, 0), (5, 3), (2, 1)] {
            let mut ep = emb.clone();
            ep[idx] += eps;
            let mut em = emb.clone();
            em[idx] -= eps;
            let (lp, _, _) = tied_output_loss(&hidden, &ep, &targets, &mask);
            let (lm, _, _) = tied_output_loss(&hidden, &em, &targets, &mask);
            let num = (lp - lm) / (2.0 * eps);
            assert!((num - d_emb[idx]).abs() < 1e-7, "embedding {idx:?}");
        }
    }

    #[test]
    fn loss_only_evaluation_matches_the_training_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let hidden = randn(&mut rng, (4, 3));
        let emb = randn(&mut rng, (8, 3));
        let targets = [1usize, 7, 0, 2];
        let mask = [true, true, true, false];
        let (full, _, _) = tied_output_loss(&hidden, &emb, &targets, &mask);
        let only = masked_nll(&hidden, &emb, &targets, &mask);
        assert_eq!(full.to_bits(), only.to_bits());
    }

    #[test]
    fn fully_masked_batch_is_silent() {
        let hidden = Array2::<f64>::ones((2, 3));
        let emb = Array2::<f64>::ones((4, 3));
        let (loss, dh, de) = tied_output_loss(&hidden, &emb, &[0, 1], &[false, false]);
        assert_eq!(loss, 0.0);
        assert!(dh.iter().all(|&x| x == 0.0));
        assert!(de.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn next_log_probs_normalizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let emb = randn(&mut rng, (9, 4));
        let row = Array1::from_vec(vec![0.3, -1.0, 0.5, 2.0]);
        let lp = next_log_probs(&row, &emb);
        let total: f64 = lp.iter().map(|&x| x.exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
