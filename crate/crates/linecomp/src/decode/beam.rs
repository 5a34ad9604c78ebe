//! Beam search over a [`SequenceModel`] constrained by a [`DecodeDomain`].
//!
//! Finished hypotheses retire into a pool of the same capacity as the
//! beam.  Because every step adds a log-probability ≤ 0, no live
//! hypothesis can outgrow its current score, so the search halts as soon
//! as the best live score cannot beat the worst pooled one.

use std::time::Instant;

use ndarray::Array1;

use super::domain::{DecodeDomain, SequenceModel};

#[derive(Debug, Clone)]
pub struct BeamParams {
    pub beam_width: usize,
    /// Hard cap on emitted symbols, finisher included.
    pub max_target_len: usize,
    /// Rank by score / length instead of raw score.  Off by default:
    /// raw log-probability ordering is the reference behavior.
    pub length_normalize: bool,
}

impl Default for BeamParams {
    fn default() -> Self {
        BeamParams {
            beam_width: 5,
            max_target_len: 100,
            length_normalize: false,
        }
    }
}

/// One ranked output of the search.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    /// Emitted symbols; for finished hypotheses the last one is the
    /// finisher.
    pub symbols: Vec<usize>,
    /// Total log-probability under the renormalized per-step
    /// distributions.
    pub log_prob: f64,
    pub finished: bool,
}

#[derive(Debug, Clone, Default)]
pub struct BeamStats {
    pub steps: usize,
    /// Hypothesis extensions scored across the whole search.
    pub expanded: usize,
    /// Wall-clock spent computing legality masks.
    pub mask_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct BeamResult {
    /// Best-first; ties broken by creation order.
    pub hypotheses: Vec<Hypothesis>,
    /// False when the length cap struck before anything finished; the
    /// hypotheses are then the best unfinished prefixes.
    pub any_finished: bool,
    pub stats: BeamStats,
}

/// Log-probabilities renormalized over an allowed subset; disallowed
/// symbols come back as `-inf`.
///
/// With a single allowed symbol its mass becomes exactly 1.  The input
/// does not need to be normalized itself, so raw logits work too.
pub fn masked_log_probs(scores: &Array1<f64>, allowed: &[bool]) -> Array1<f64> {
    assert_eq!(scores.len(), allowed.len());
    let mut max = f64::NEG_INFINITY;
    for (s, &a) in scores.iter().zip(allowed) {
        if a && *s > max {
            max = *s;
        }
    }
    if max == f64::NEG_INFINITY {
        return Array1::from_elem(scores.len(), f64::NEG_INFINITY);
    }
    let log_z = max
        + scores
            .iter()
            .zip(allowed)
            .filter(|(_, &a)| a)
            .map(|(s, _)| (s - max).exp())
            .sum::<f64>()
            .ln();
    Array1::from_iter(
        scores
            .iter()
            .zip(allowed)
            .map(|(s, &a)| if a { s - log_z } else { f64::NEG_INFINITY }),
    )
}

/// Probability-space view of [`masked_log_probs`]; disallowed symbols
/// get 0.
pub fn masked_distribution(scores: &Array1<f64>, allowed: &[bool]) -> Array1<f64> {
    masked_log_probs(scores, allowed).mapv(f64::exp)
}

struct Live<S> {
    symbols: Vec<usize>,
    log_prob: f64,
    state: S,
    order: u64,
}

struct Finished {
    symbols: Vec<usize>,
    log_prob: f64,
    order: u64,
}

fn rank_score(log_prob: f64, len: usize, normalize: bool) -> f64 {
    if normalize && len > 0 {
        log_prob / len as f64
    } else {
        log_prob
    }
}

pub fn beam_search<M, D>(model: &M, domain: &D, params: &BeamParams) -> BeamResult
where
    M: SequenceModel,
    D: DecodeDomain,
{
    assert!(params.beam_width >= 1, "beam width must be at least 1");
    let vocab = model.vocab_size();
    let mut stats = BeamStats::default();
    let mut order: u64 = 0;
    let mut next_order = || {
        order += 1;
        order
    };

    let mut live = vec![Live {
        symbols: Vec::new(),
        log_prob: 0.0,
        state: domain.start(),
        order: next_order(),
    }];
    let mut pool: Vec<Finished> = Vec::new();
    let mut allowed = vec![false; vocab];

    for _ in 0..params.max_target_len {
        if live.is_empty() {
            break;
        }
        if pool.len() >= params.beam_width {
            let best_live = live
                .iter()
                .map(|h| rank_score(h.log_prob, h.symbols.len() + 1, params.length_normalize))
                .fold(f64::NEG_INFINITY, f64::max);
            let worst_pooled = pool
                .iter()
                .map(|h| rank_score(h.log_prob, h.symbols.len(), params.length_normalize))
                .fold(f64::INFINITY, f64::min);
            // Scores only fall with length, so nothing live can still
            // displace the pool.
            if best_live <= worst_pooled {
                break;
            }
        }
        stats.steps += 1;

        let mut next_live: Vec<Live<D::State>> = Vec::new();
        for hyp in &live {
            let scores = model.next_log_probs(&hyp.symbols);
            allowed.fill(false);
            let mask_start = Instant::now();
            domain.fill_allowed(&hyp.state, &mut allowed);
            stats.mask_seconds += mask_start.elapsed().as_secs_f64();
            let step_lp = masked_log_probs(&scores, &allowed);

            for (sym, lp) in step_lp.iter().enumerate() {
                if !lp.is_finite() {
                    continue;
                }
                stats.expanded += 1;
                let log_prob = hyp.log_prob + lp;
                let mut symbols = hyp.symbols.clone();
                symbols.push(sym);
                if domain.is_final(sym) {
                    pool.push(Finished {
                        symbols,
                        log_prob,
                        order: next_order(),
                    });
                } else {
                    next_live.push(Live {
                        symbols,
                        log_prob,
                        state: domain.advance(&hyp.state, sym),
                        order: next_order(),
                    });
                }
            }
        }

        sort_ranked(&mut pool, params, |f| (f.log_prob, f.symbols.len(), f.order));
        pool.truncate(params.beam_width);
        sort_ranked(&mut next_live, params, |l| {
            (l.log_prob, l.symbols.len(), l.order)
        });
        next_live.truncate(params.beam_width);
        live = next_live;
    }

    let any_finished = !pool.is_empty();
    let hypotheses = if any_finished {
        pool.into_iter()
            .map(|f| Hypothesis {
                symbols: f.symbols,
                log_prob: f.log_prob,
                finished: true,
            })
            .collect()
    } else {
        sort_ranked(&mut live, params, |l| (l.log_prob, l.symbols.len(), l.order));
        live.into_iter()
            .map(|l| Hypothesis {
                symbols: l.symbols,
                log_prob: l.log_prob,
                finished: false,
            })
            .collect()
    };
    BeamResult {
        hypotheses,
        any_finished,
        stats,
    }
}

/// Best-first by ranking score, then by creation order for exact ties.
fn sort_ranked<T>(items: &mut [T], params: &BeamParams, key: impl Fn(&T) -> (f64, usize, u64)) {
    items.sort_by(|a, b| {
        let (sa, la, oa) = key(a);
        let (sb, lb, ob) = key(b);
        let ra = rank_score(sa, la, params.length_normalize);
        let rb = rank_score(sb, lb, params.length_normalize);
        rb.partial_cmp(&ra)
            .expect("scores stay comparable")
            .then(oa.cmp(&ob))
    });
}
